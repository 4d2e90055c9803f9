#pragma once

#include <cstdio>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rainsplat/grid.hpp"

namespace rainsplat {

// Mixture parameters for the rainfall-aware proposal distribution
// P = w_grad * G + w_uniform * U + w_heavy * H, where U is uniform over
// the rain-support mask, G is the masked gradient magnitude and H is a
// softmax of intensity over the whole grid.
struct SamplingConfig {
    double tau = 0.1;          // rain/no-rain threshold, mm/h
    double w_grad = 0.3;       // edge term weight
    double w_uniform = 0.4;    // coverage term weight
    double w_heavy = 0.3;      // intensity term weight
    double temperature = 1.0;  // softmax sharpness for the heavy term
    double epsilon = 1e-8;     // denominator regularizer
    std::size_t k_points = 6000;
    double nms_radius = 1.5;   // grid units; points closer than this are suppressed
    bool mask_heavy = false;   // restrict the heavy term to the rain-support mask
    std::uint64_t seed = 0;

    void validate() const {
        if (!(w_grad >= 0.0 && w_uniform >= 0.0 && w_heavy >= 0.0))
            throw data_error("sampling: mixture weights must be >= 0");
        if (std::abs(w_grad + w_uniform + w_heavy - 1.0) > 1e-12)
            throw data_error("sampling: mixture weights must sum to 1");
        if (!(temperature > 0.0)) throw data_error("sampling: temperature must be > 0");
        if (!(epsilon > 0.0)) throw data_error("sampling: epsilon must be > 0");
        if (k_points < 1) throw data_error("sampling: k_points must be >= 1");
        if (!(nms_radius >= 0.0)) throw data_error("sampling: nms_radius must be >= 0");
    }
};

struct SamplePoint {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0; // field value at the source cell
    double prob = 0.0;  // proposal probability at the source cell (diagnostic)
};

struct SampleResult {
    std::vector<SamplePoint> points;
    bool truncated = false; // fewer points than requested were available
};

// Rain-support mask: cell is true iff value > tau and not missing.
inline std::vector<bool> support_mask(const GridField& field, double tau) {
    std::vector<bool> mask(field.values.size(), false);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        const double v = field.values[i];
        mask[i] = !is_missing(v) && v > tau;
    }
    return mask;
}

// Gradient magnitude per cell: central differences in the interior,
// one-sided at borders, missing neighbors treated as the cell's own
// value (zero contribution).
inline GridField gradient_magnitude(const GridField& field) {
    field.spec.validate();
    const GridSpec& spec = field.spec;
    GridField out(spec, 0.0);
    const double inv_h = 1.0 / spec.cell_size;
    auto value_or = [&](long r, long c, double fallback) {
        if (!spec.in_bounds(r, c)) return fallback;
        const double v = field.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        return is_missing(v) ? fallback : v;
    };
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const double v0 = field.at(r, c);
            if (is_missing(v0)) {
                out.at(r, c) = missing_value();
                continue;
            }
            const long rl = static_cast<long>(r);
            const long cl = static_cast<long>(c);
            const double xm = value_or(rl, cl - 1, v0);
            const double xp = value_or(rl, cl + 1, v0);
            const double ym = value_or(rl - 1, cl, v0);
            const double yp = value_or(rl + 1, cl, v0);
            // denominator shrinks to cell_size at borders (one-sided)
            const double dxs = (spec.in_bounds(rl, cl - 1) && spec.in_bounds(rl, cl + 1)) ? 2.0 : 1.0;
            const double dys = (spec.in_bounds(rl - 1, cl) && spec.in_bounds(rl + 1, cl)) ? 2.0 : 1.0;
            const double gx = (xp - xm) * inv_h / dxs;
            const double gy = (yp - ym) * inv_h / dys;
            out.at(r, c) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

// The proposal distribution over cells. Each term is normalized with the
// +epsilon regularizer and the mixture is renormalized to sum to exactly 1
// (so an empty mask leaves all mass on the heavy term). Missing cells get
// probability 0.
inline std::vector<double> sampling_distribution(const GridField& field, const SamplingConfig& cfg) {
    cfg.validate();
    field.spec.validate();
    const std::size_t n = field.values.size();
    for (double v : field.values)
        if (!is_missing(v) && !std::isfinite(v))
            throw data_error("sampling: non-finite field value");

    const std::vector<bool> mask = support_mask(field, cfg.tau);
    const GridField grad = gradient_magnitude(field);

    double mask_count = 0.0;
    double grad_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        mask_count += 1.0;
        if (!is_missing(grad.values[i])) grad_sum += grad.values[i];
    }

    // softmax with max subtraction; optionally masked to the rain support
    double logit_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (is_missing(field.values[i])) continue;
        if (cfg.mask_heavy && !mask[i]) continue;
        logit_max = std::max(logit_max, field.values[i] / cfg.temperature);
    }
    std::vector<double> heavy(n, 0.0);
    double heavy_sum = 0.0;
    if (std::isfinite(logit_max)) {
        for (std::size_t i = 0; i < n; ++i) {
            if (is_missing(field.values[i])) continue;
            if (cfg.mask_heavy && !mask[i]) continue;
            heavy[i] = std::exp(field.values[i] / cfg.temperature - logit_max);
            heavy_sum += heavy[i];
        }
    }

    std::vector<double> prob(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_missing(field.values[i])) continue;
        double p = 0.0;
        if (mask[i]) {
            p += cfg.w_uniform / (mask_count + cfg.epsilon);
            p += cfg.w_grad * grad.values[i] / (grad_sum + cfg.epsilon);
        }
        if (heavy_sum > 0.0) p += cfg.w_heavy * heavy[i] / heavy_sum;
        prob[i] = p;
        total += p;
    }
    if (total <= 0.0) throw data_error("sampling: proposal distribution has no mass");
    for (double& p : prob) p /= total;
    return prob;
}

namespace detail {

// Fenwick tree over per-cell masses for O(log n) weighted draws.
class MassTree {
public:
    explicit MassTree(const std::vector<double>& w) : n_(w.size()), tree_(w.size() + 1, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) add(i, w[i]);
    }

    void add(std::size_t i, double delta) {
        for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += delta;
    }

    double total() const {
        double t = 0.0;
        for (std::size_t j = n_; j > 0; j -= j & (~j + 1)) t += tree_[j];
        return t;
    }

    // smallest index with cumulative mass > target
    std::size_t find(double target) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 <= n_) step *= 2;
        for (; step > 0; step /= 2) {
            if (pos + step <= n_ && tree_[pos + step] <= target) {
                pos += step;
                target -= tree_[pos];
            }
        }
        return pos; // 0-based index
    }

private:
    std::size_t n_;
    std::vector<double> tree_;
};

} // namespace detail

// Sequential sampling without replacement with non-maximum suppression:
// after each acceptance every remaining cell whose center lies strictly
// within nms_radius of the accepted point loses its mass. Stops at
// k_points or when the remaining mass drops below epsilon.
inline SampleResult draw_points(const std::vector<double>& prob, const GridField& field,
                                const SamplingConfig& cfg) {
    cfg.validate();
    field.spec.validate();
    const GridSpec& spec = field.spec;
    if (prob.size() != spec.size())
        throw data_error("draw_points: probability grid size mismatch");
    double sum = 0.0;
    for (double p : prob) {
        if (!(p >= 0.0)) throw data_error("draw_points: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw data_error("draw_points: probabilities must sum to 1");

    std::vector<double> mass = prob;
    detail::MassTree tree(mass);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const long radius_cells =
        static_cast<long>(std::ceil(cfg.nms_radius / spec.cell_size));

    SampleResult result;
    result.points.reserve(cfg.k_points);
    while (result.points.size() < cfg.k_points) {
        const double total = tree.total();
        if (total < cfg.epsilon) {
            result.truncated = true;
            break;
        }
        const std::size_t idx = tree.find(unit(rng) * total);
        if (idx >= mass.size() || mass[idx] <= 0.0) continue; // boundary rounding, redraw
        const std::size_t r = idx / spec.cols;
        const std::size_t c = idx % spec.cols;

        SamplePoint pt;
        pt.x = spec.x_of(c);
        pt.y = spec.y_of(r);
        pt.value = field.at(r, c);
        pt.prob = prob[idx];
        result.points.push_back(pt);

        // suppress the accepted cell and its neighborhood
        tree.add(idx, -mass[idx]);
        mass[idx] = 0.0;
        const double r2 = cfg.nms_radius * cfg.nms_radius;
        for (long dr = -radius_cells; dr <= radius_cells; ++dr) {
            const long rr = static_cast<long>(r) + dr;
            if (rr < 0 || rr >= static_cast<long>(spec.rows)) continue;
            for (long dc = -radius_cells; dc <= radius_cells; ++dc) {
                const long cc = static_cast<long>(c) + dc;
                if (cc < 0 || cc >= static_cast<long>(spec.cols)) continue;
                const double ddx = static_cast<double>(dc) * spec.cell_size;
                const double ddy = static_cast<double>(dr) * spec.cell_size;
                if (ddx * ddx + ddy * ddy >= r2) continue;
                const std::size_t j = static_cast<std::size_t>(rr) * spec.cols +
                                      static_cast<std::size_t>(cc);
                if (mass[j] > 0.0) {
                    tree.add(j, -mass[j]);
                    mass[j] = 0.0;
                }
            }
        }
    }
    return result;
}

inline void write_sample_points(const std::vector<SamplePoint>& points, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("samples: cannot open for writing: " + path);
    os << "x,y,value,prob\n";
    char buf[160];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", p.x, p.y, p.value, p.prob);
        os << buf << "\n";
    }
    if (!os) throw io_error("samples: write failed: " + path);
}

} // namespace rainsplat
