#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rainsplat/grid.hpp"
#include "rainsplat/parallel.hpp"
#include "rainsplat/stations.hpp"

namespace rainsplat {

struct BarnesConfig {
    double sigma = 0.0;        // kernel width, grid units; <= 0 means "from data"
    int passes = 1;
    double gamma_refine = 0.3; // width shrink factor for correction passes
    unsigned threads = 1;

    void validate() const {
        if (passes < 1) throw data_error("barnes: passes must be >= 1");
        if (!(gamma_refine > 0.0 && gamma_refine <= 1.0))
            throw data_error("barnes: gamma_refine must be in (0, 1]");
    }
};

enum class VariogramKind { exponential, spherical };

struct VariogramModel {
    VariogramKind kind = VariogramKind::exponential;
    double nugget = 0.0;
    double sill = 1.0;
    double range = 1.0;
    bool degenerate = false; // fell back to defaults

    void validate() const {
        if (!(nugget >= 0.0) || !(sill >= nugget))
            throw data_error("variogram: need sill >= nugget >= 0");
        if (!(range > 0.0)) throw data_error("variogram: range must be > 0");
    }

    // semivariance; gamma(0) = 0 by convention, nugget is the h->0+ limit
    double operator()(double h) const {
        if (h <= 0.0) return 0.0;
        const double partial = sill - nugget;
        if (kind == VariogramKind::exponential)
            return nugget + partial * (1.0 - std::exp(-3.0 * h / range));
        if (h >= range) return sill;
        const double u = h / range;
        return nugget + partial * (1.5 * u - 0.5 * u * u * u);
    }
};

struct MQConfig {
    double c = 0.0;         // shape parameter, grid units; <= 0 means "from data"
    double smoothing = 0.0; // diagonal regularizer
    unsigned threads = 1;

    void validate() const {
        if (!(smoothing >= 0.0)) throw data_error("mq: smoothing must be >= 0");
    }
};

namespace detail {

// Canonical (id-sorted) order so results do not depend on input order.
inline std::vector<StationObs> ok_stations(const StationSet& set) {
    std::vector<StationObs> out;
    for (const auto& s : set.stations)
        if (s.quality == Quality::ok) out.push_back(s);
    std::sort(out.begin(), out.end(),
              [](const StationObs& a, const StationObs& b) { return a.id < b.id; });
    return out;
}

inline double mean_nn_distance(const std::vector<StationObs>& st) {
    if (st.size() < 2) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < st.size(); ++j) {
            if (i == j) continue;
            const double dx = st[i].x - st[j].x;
            const double dy = st[i].y - st[j].y;
            best = std::min(best, std::hypot(dx, dy));
        }
        acc += best;
    }
    const double mean = acc / static_cast<double>(st.size());
    return mean > 0.0 ? mean : 1.0;
}

inline void check_distinct_coords(const std::vector<StationObs>& st) {
    for (std::size_t i = 0; i < st.size(); ++i)
        for (std::size_t j = i + 1; j < st.size(); ++j)
            if (st[i].x == st[j].x && st[i].y == st[j].y)
                throw numeric_error("interp: stations '" + st[i].id + "' and '" + st[j].id +
                                    "' share coordinates");
}

} // namespace detail

// Multi-pass Barnes analysis. Pass 1 is the Gaussian-weighted mean of
// station values; later passes add a correction field built from station
// residuals with the kernel width shrunk by gamma_refine. Cells with all
// stations beyond the 8-sigma cutoff are missing.
inline GridField barnes(const StationSet& stations, const GridSpec& target, BarnesConfig cfg) {
    cfg.validate();
    target.validate();
    stations.validate();
    const auto st = detail::ok_stations(stations);
    if (st.empty()) throw data_error("barnes: no usable (quality=ok) stations");
    if (cfg.sigma <= 0.0) cfg.sigma = detail::mean_nn_distance(st);

    const std::size_t n = st.size();
    std::vector<double> fitted(n, 0.0); // running analysis at station locations
    std::vector<double> weights_value(n);
    for (std::size_t i = 0; i < n; ++i) weights_value[i] = st[i].value;

    GridField out(target, missing_value());

    auto weighted_eval = [&](double x, double y, double sigma,
                             const std::vector<double>& values, bool& valid) {
        const double cutoff2 = (8.0 * sigma) * (8.0 * sigma);
        const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = x - st[i].x;
            const double dy = y - st[i].y;
            const double d2 = dx * dx + dy * dy;
            if (d2 > cutoff2) continue;
            const double w = std::exp(-d2 * inv_2s2);
            num += w * values[i];
            den += w;
        }
        valid = den > 0.0;
        return valid ? num / den : 0.0;
    };

    for (int pass = 0; pass < cfg.passes; ++pass) {
        const double sigma = (pass == 0) ? cfg.sigma : cfg.gamma_refine * cfg.sigma;
        std::vector<double> values(n);
        if (pass == 0) {
            values = weights_value;
        } else {
            for (std::size_t i = 0; i < n; ++i) values[i] = st[i].value - fitted[i];
        }

        // update analysis at station locations with the same kernel
        std::vector<double> station_update(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            bool valid = false;
            station_update[i] = weighted_eval(st[i].x, st[i].y, sigma, values, valid);
        }
        for (std::size_t i = 0; i < n; ++i)
            fitted[i] = (pass == 0) ? station_update[i] : fitted[i] + station_update[i];

        parallel_chunks(target.rows, 16, cfg.threads, [&](std::size_t r0, std::size_t r1) {
            for (std::size_t r = r0; r < r1; ++r) {
                const double y = target.y_of(r);
                for (std::size_t c = 0; c < target.cols; ++c) {
                    bool valid = false;
                    const double v = weighted_eval(target.x_of(c), y, sigma, values, valid);
                    double& cell = out.at(r, c);
                    if (pass == 0) {
                        cell = valid ? v : missing_value();
                    } else if (!is_missing(cell) && valid) {
                        cell += v;
                    }
                }
            }
        });
    }
    return out;
}

// Empirical semivariogram + least-squares model fit. Given the range, the
// model is linear in (nugget, partial sill), so the fit is a 1D search
// over candidate ranges with a constrained linear solve at each.
inline VariogramModel fit_variogram(const StationSet& stations, int n_bins = 12,
                                    VariogramKind kind = VariogramKind::exponential) {
    stations.validate();
    const auto st = detail::ok_stations(stations);
    if (st.size() < 3) throw data_error("fit_variogram: need at least 3 ok-stations");
    if (n_bins < 2) throw data_error("fit_variogram: need at least 2 bins");

    const std::size_t n = st.size();
    double mean = 0.0;
    for (const auto& s : st) mean += s.value;
    mean /= static_cast<double>(n);
    double variance = 0.0;
    for (const auto& s : st) variance += (s.value - mean) * (s.value - mean);
    variance /= static_cast<double>(n > 1 ? n - 1 : 1);

    double min_x = st[0].x, max_x = st[0].x, min_y = st[0].y, max_y = st[0].y;
    double max_dist = 0.0;
    for (const auto& s : st) {
        min_x = std::min(min_x, s.x); max_x = std::max(max_x, s.x);
        min_y = std::min(min_y, s.y); max_y = std::max(max_y, s.y);
    }
    const double diag = std::hypot(max_x - min_x, max_y - min_y);

    VariogramModel fallback;
    fallback.kind = kind;
    fallback.nugget = 0.0;
    fallback.sill = std::max(variance, 1e-12);
    fallback.range = std::max(diag / 3.0, 1e-6);
    fallback.degenerate = true;
    if (variance < 1e-12 || diag <= 0.0) return fallback;

    // empirical semivariance binned to half the max pair distance
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            max_dist = std::max(max_dist, std::hypot(st[i].x - st[j].x, st[i].y - st[j].y));
    const double h_max = 0.5 * max_dist;
    if (h_max <= 0.0) return fallback;
    const double bin_w = h_max / n_bins;
    std::vector<double> gamma_sum(n_bins, 0.0), h_sum(n_bins, 0.0);
    std::vector<std::size_t> counts(n_bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double h = std::hypot(st[i].x - st[j].x, st[i].y - st[j].y);
            if (h <= 0.0 || h > h_max) continue;
            int b = std::min(n_bins - 1, static_cast<int>(h / bin_w));
            const double dv = st[i].value - st[j].value;
            gamma_sum[b] += 0.5 * dv * dv;
            h_sum[b] += h;
            counts[b] += 1;
        }
    }
    std::vector<double> emp_h, emp_g;
    for (int b = 0; b < n_bins; ++b) {
        if (counts[b] == 0) continue;
        emp_h.push_back(h_sum[b] / static_cast<double>(counts[b]));
        emp_g.push_back(gamma_sum[b] / static_cast<double>(counts[b]));
    }
    if (emp_h.size() < 3) return fallback;

    auto basis = [&](double h, double range) {
        VariogramModel m;
        m.kind = kind;
        m.nugget = 0.0;
        m.sill = 1.0;
        m.range = range;
        return m(h); // shape function with unit partial sill
    };

    double best_sse = std::numeric_limits<double>::infinity();
    VariogramModel best = fallback;
    for (int k = 1; k <= 40; ++k) {
        const double range = h_max * static_cast<double>(k) / 20.0; // up to 2*h_max
        Eigen::MatrixXd A(emp_h.size(), 2);
        Eigen::VectorXd b(emp_h.size());
        for (std::size_t i = 0; i < emp_h.size(); ++i) {
            A(static_cast<Eigen::Index>(i), 0) = 1.0;
            A(static_cast<Eigen::Index>(i), 1) = basis(emp_h[i], range);
            b(static_cast<Eigen::Index>(i)) = emp_g[i];
        }
        Eigen::Vector2d coef = (A.transpose() * A).ldlt().solve(A.transpose() * b);
        double nugget = std::max(coef(0), 0.0);
        double partial = std::max(coef(1), 0.0);
        double sse = 0.0;
        for (std::size_t i = 0; i < emp_h.size(); ++i) {
            const double pred = nugget + partial * basis(emp_h[i], range);
            sse += (pred - emp_g[i]) * (pred - emp_g[i]);
        }
        if (sse < best_sse) {
            best_sse = sse;
            best.kind = kind;
            best.nugget = nugget;
            best.sill = nugget + partial;
            best.range = range;
            best.degenerate = false;
        }
    }
    if (best.degenerate || best.sill <= 1e-12) return fallback;
    return best;
}

// Ordinary kriging with a Lagrange multiplier forcing the weights to sum
// to 1. The bordered system is factored once and reused for every cell.
inline GridField kriging(const StationSet& stations, const GridSpec& target,
                         const VariogramModel& model, unsigned threads = 1) {
    model.validate();
    target.validate();
    stations.validate();
    const auto st = detail::ok_stations(stations);
    if (st.empty()) throw data_error("kriging: no usable (quality=ok) stations");
    if (model.nugget == 0.0) detail::check_distinct_coords(st);

    const Eigen::Index n = static_cast<Eigen::Index>(st.size());
    Eigen::MatrixXd K(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = std::hypot(st[static_cast<std::size_t>(i)].x - st[static_cast<std::size_t>(j)].x,
                                        st[static_cast<std::size_t>(i)].y - st[static_cast<std::size_t>(j)].y);
            K(i, j) = model(h);
        }
        K(i, n) = 1.0;
        K(n, i) = 1.0;
    }
    K(n, n) = 0.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) throw numeric_error("kriging: singular system");

    GridField out(target, 0.0);
    parallel_chunks(target.rows, 8, threads, [&](std::size_t r0, std::size_t r1) {
        Eigen::VectorXd rhs(n + 1);
        for (std::size_t r = r0; r < r1; ++r) {
            const double y = target.y_of(r);
            for (std::size_t c = 0; c < target.cols; ++c) {
                const double x = target.x_of(c);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const auto& s = st[static_cast<std::size_t>(i)];
                    rhs(i) = model(std::hypot(x - s.x, y - s.y));
                }
                rhs(n) = 1.0;
                const Eigen::VectorXd w = lu.solve(rhs);
                double v = 0.0;
                for (Eigen::Index i = 0; i < n; ++i)
                    v += w(i) * st[static_cast<std::size_t>(i)].value;
                out.at(r, c) = v;
            }
        }
    });
    return out;
}

// Multiquadric RBF interpolation: solve (Phi + smoothing*I) w = y with
// phi(r) = sqrt(r^2 + c^2), then evaluate the expansion per cell.
inline GridField multiquadric(const StationSet& stations, const GridSpec& target, MQConfig cfg) {
    cfg.validate();
    target.validate();
    stations.validate();
    const auto st = detail::ok_stations(stations);
    if (st.empty()) throw data_error("mq: no usable (quality=ok) stations");
    if (cfg.smoothing == 0.0) detail::check_distinct_coords(st);
    if (cfg.c < 0.0) cfg.c = 0.0;
    if (cfg.c == 0.0 && st.size() >= 2) cfg.c = detail::mean_nn_distance(st);

    const Eigen::Index n = static_cast<Eigen::Index>(st.size());
    Eigen::MatrixXd Phi(n, n);
    Eigen::VectorXd y(n);
    const double c2 = cfg.c * cfg.c;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& si = st[static_cast<std::size_t>(i)];
        y(i) = si.value;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& sj = st[static_cast<std::size_t>(j)];
            const double dx = si.x - sj.x;
            const double dy = si.y - sj.y;
            Phi(i, j) = std::sqrt(dx * dx + dy * dy + c2);
        }
        Phi(i, i) += cfg.smoothing;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Phi);
    if (!lu.isInvertible()) throw numeric_error("mq: singular system");
    const Eigen::VectorXd w = lu.solve(y);

    GridField out(target, 0.0);
    parallel_chunks(target.rows, 16, cfg.threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const double yy = target.y_of(r);
            for (std::size_t c = 0; c < target.cols; ++c) {
                const double xx = target.x_of(c);
                double v = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const auto& s = st[static_cast<std::size_t>(i)];
                    const double dx = xx - s.x;
                    const double dy = yy - s.y;
                    v += w(i) * std::sqrt(dx * dx + dy * dy + c2);
                }
                out.at(r, c) = v;
            }
        }
    });
    return out;
}

} // namespace rainsplat
