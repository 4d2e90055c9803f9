#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "rainsplat/grid.hpp"

namespace rainsplat {

// Threshold-exceedance contingency counts. The event convention is
// strict: value > threshold. Cells missing in either field are excluded.
struct ContingencyCounts {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t false_alarms = 0;
    std::size_t correct_negatives = 0;

    std::size_t total() const { return hits + misses + false_alarms + correct_negatives; }
};

inline void require_same_spec(const GridField& a, const GridField& b, const char* what) {
    if (!(a.spec == b.spec)) throw data_error(std::string(what) + ": grid specs differ");
}

inline ContingencyCounts contingency(const GridField& pred, const GridField& obs, double threshold) {
    require_same_spec(pred, obs, "contingency");
    ContingencyCounts c;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const double p = pred.values[i];
        const double o = obs.values[i];
        if (is_missing(p) || is_missing(o)) continue;
        const bool pe = p > threshold;
        const bool oe = o > threshold;
        if (pe && oe) ++c.hits;
        else if (!pe && oe) ++c.misses;
        else if (pe && !oe) ++c.false_alarms;
        else ++c.correct_negatives;
    }
    return c;
}

// Each score returns nullopt when its denominator is zero.
inline std::optional<double> csi(const ContingencyCounts& c) {
    const double den = static_cast<double>(c.hits + c.misses + c.false_alarms);
    if (den == 0.0) return std::nullopt;
    return static_cast<double>(c.hits) / den;
}

inline std::optional<double> pod(const ContingencyCounts& c) {
    const double den = static_cast<double>(c.hits + c.misses);
    if (den == 0.0) return std::nullopt;
    return static_cast<double>(c.hits) / den;
}

inline std::optional<double> far(const ContingencyCounts& c) {
    const double den = static_cast<double>(c.hits + c.false_alarms);
    if (den == 0.0) return std::nullopt;
    return static_cast<double>(c.false_alarms) / den;
}

inline std::optional<double> freq_bias(const ContingencyCounts& c) {
    const double den = static_cast<double>(c.hits + c.misses);
    if (den == 0.0) return std::nullopt;
    return static_cast<double>(c.hits + c.false_alarms) / den;
}

inline double rmse(const GridField& pred, const GridField& obs) {
    require_same_spec(pred, obs, "rmse");
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (is_missing(pred.values[i]) || is_missing(obs.values[i])) continue;
        const double d = pred.values[i] - obs.values[i];
        sq += d * d;
        ++n;
    }
    if (n == 0) throw data_error("rmse: no jointly non-missing cells");
    return std::sqrt(sq / static_cast<double>(n));
}

namespace detail {

// Neighborhood event fraction with windows cropped at the borders
// (mean over the valid part of the window). Missing cells count as
// non-events and stay in the denominator.
inline std::vector<double> event_fractions(const GridField& f, double threshold, int window) {
    const long rows = static_cast<long>(f.rows());
    const long cols = static_cast<long>(f.cols());
    const int half = window / 2;
    std::vector<double> bin(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i)
        bin[i] = (!is_missing(f.values[i]) && f.values[i] > threshold) ? 1.0 : 0.0;

    // separable box mean via running sums along rows then columns
    std::vector<double> tmp(bin.size(), 0.0), out(bin.size(), 0.0);
    std::vector<double> cnt_row(bin.size(), 0.0);
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            const long c0 = std::max(0L, c - half);
            const long c1 = std::min(cols - 1, c + half);
            double s = 0.0;
            for (long cc = c0; cc <= c1; ++cc) s += bin[r * cols + cc];
            tmp[r * cols + c] = s;
            cnt_row[r * cols + c] = static_cast<double>(c1 - c0 + 1);
        }
    }
    for (long c = 0; c < cols; ++c) {
        for (long r = 0; r < rows; ++r) {
            const long r0 = std::max(0L, r - half);
            const long r1 = std::min(rows - 1, r + half);
            double s = 0.0, n = 0.0;
            for (long rr = r0; rr <= r1; ++rr) {
                s += tmp[rr * cols + c];
                n += cnt_row[rr * cols + c];
            }
            out[r * cols + c] = s / n;
        }
    }
    return out;
}

} // namespace detail

// Roberts-Lean fraction skill score over window x window neighborhoods.
// Returns 1 when neither field has any event.
inline double fss(const GridField& pred, const GridField& obs, double threshold, int window) {
    require_same_spec(pred, obs, "fss");
    if (window < 1 || window % 2 == 0) throw data_error("fss: window must be odd and >= 1");
    const auto pf = detail::event_fractions(pred, threshold, window);
    const auto of = detail::event_fractions(obs, threshold, window);
    double mse = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        const double d = pf[i] - of[i];
        mse += d * d;
        ref += pf[i] * pf[i] + of[i] * of[i];
    }
    if (ref == 0.0) return 1.0;
    return 1.0 - mse / ref;
}

inline std::optional<double> pearson(const GridField& pred, const GridField& obs) {
    require_same_spec(pred, obs, "pearson");
    double sp = 0.0, so = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (is_missing(pred.values[i]) || is_missing(obs.values[i])) continue;
        sp += pred.values[i];
        so += obs.values[i];
        ++n;
    }
    if (n < 2) throw data_error("pearson: need at least 2 jointly non-missing cells");
    const double mp = sp / static_cast<double>(n);
    const double mo = so / static_cast<double>(n);
    double cov = 0.0, vp = 0.0, vo = 0.0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (is_missing(pred.values[i]) || is_missing(obs.values[i])) continue;
        const double dp = pred.values[i] - mp;
        const double dob = obs.values[i] - mo;
        cov += dp * dob;
        vp += dp * dp;
        vo += dob * dob;
    }
    if (vp == 0.0 || vo == 0.0) return std::nullopt;
    return cov / std::sqrt(vp * vo);
}

namespace detail {

// midrank transform over the jointly valid cells
inline std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

inline std::optional<double> spearman(const GridField& pred, const GridField& obs) {
    require_same_spec(pred, obs, "spearman");
    std::vector<double> p, o;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (is_missing(pred.values[i]) || is_missing(obs.values[i])) continue;
        p.push_back(pred.values[i]);
        o.push_back(obs.values[i]);
    }
    if (p.size() < 2) throw data_error("spearman: need at least 2 jointly non-missing cells");
    const auto rp = detail::midranks(p);
    const auto ro = detail::midranks(o);
    GridSpec spec{0.0, 0.0, 1.0, 1, p.size()};
    GridField fp(spec), fo(spec);
    fp.values = rp;
    fo.values = ro;
    return pearson(fp, fo);
}

struct PsdBin {
    double wavenumber = 0.0; // bin-center radial wavenumber, cycles per grid unit
    double power = 0.0;      // mean power over the bin
    std::size_t count = 0;   // number of spectral cells in the bin
};

struct PsdResult {
    double dc_power = 0.0; // zero-frequency power, reported separately
    std::vector<PsdBin> bins;
};

namespace detail {

// Row-column DFT (unnormalized, naive O(n^2) per line); grids here are
// small enough that an FFT dependency is not warranted.
inline std::vector<std::complex<double>> dft2(const std::vector<double>& v, std::size_t rows,
                                              std::size_t cols) {
    using cd = std::complex<double>;
    std::vector<cd> tmp(rows * cols), out(rows * cols);
    std::vector<cd> tw_c(cols * cols), tw_r(rows * rows);
    for (std::size_t k = 0; k < cols; ++k)
        for (std::size_t x = 0; x < cols; ++x)
            tw_c[k * cols + x] = std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * x % cols) /
                                                     static_cast<double>(cols));
    for (std::size_t k = 0; k < rows; ++k)
        for (std::size_t y = 0; y < rows; ++y)
            tw_r[k * rows + y] = std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * y % rows) /
                                                     static_cast<double>(rows));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < cols; ++k) {
            cd acc(0.0, 0.0);
            for (std::size_t x = 0; x < cols; ++x) acc += v[r * cols + x] * tw_c[k * cols + x];
            tmp[r * cols + k] = acc;
        }
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t k = 0; k < rows; ++k) {
            cd acc(0.0, 0.0);
            for (std::size_t y = 0; y < rows; ++y) acc += tmp[y * cols + c] * tw_r[k * rows + y];
            out[k * cols + c] = acc;
        }
    return out;
}

} // namespace detail

// Radially averaged power spectrum. Power is |F|^2 / (rows*cols), so the
// total over all spectral cells equals the field's sum of squares
// (Parseval). No taper is applied.
inline PsdResult psd_radial(const GridField& field, int n_bins) {
    field.spec.validate();
    if (n_bins < 1) throw data_error("psd: n_bins must be >= 1");
    for (double v : field.values)
        if (is_missing(v)) throw data_error("psd: field has missing cells");

    const std::size_t rows = field.rows(), cols = field.cols();
    const auto spectrum = detail::dft2(field.values, rows, cols);
    const double norm = 1.0 / static_cast<double>(rows * cols);
    const double dkx = 1.0 / (static_cast<double>(cols) * field.spec.cell_size);
    const double dky = 1.0 / (static_cast<double>(rows) * field.spec.cell_size);
    const double kx_max = 0.5 / field.spec.cell_size;
    const double k_max = std::hypot(kx_max, 0.5 / field.spec.cell_size);

    PsdResult res;
    res.bins.resize(static_cast<std::size_t>(n_bins));
    std::vector<double> psum(static_cast<std::size_t>(n_bins), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double fr = (r <= rows / 2) ? static_cast<double>(r)
                                          : static_cast<double>(r) - static_cast<double>(rows);
        for (std::size_t c = 0; c < cols; ++c) {
            const double fc = (c <= cols / 2) ? static_cast<double>(c)
                                              : static_cast<double>(c) - static_cast<double>(cols);
            const double power = std::norm(spectrum[r * cols + c]) * norm;
            if (r == 0 && c == 0) {
                res.dc_power = power;
                continue;
            }
            const double k = std::hypot(fc * dkx, fr * dky);
            int b = static_cast<int>(k / k_max * n_bins);
            b = std::clamp(b, 0, n_bins - 1);
            psum[static_cast<std::size_t>(b)] += power;
            res.bins[static_cast<std::size_t>(b)].count += 1;
        }
    }
    for (int b = 0; b < n_bins; ++b) {
        auto& bin = res.bins[static_cast<std::size_t>(b)];
        bin.wavenumber = (static_cast<double>(b) + 0.5) * k_max / n_bins;
        bin.power = bin.count > 0 ? psum[static_cast<std::size_t>(b)] / static_cast<double>(bin.count)
                                  : 0.0;
    }
    return res;
}

struct EvalReport {
    double rmse = 0.0;
    std::map<double, std::optional<double>> csi, pod, far, freq_bias;
    std::map<std::pair<double, int>, double> fss; // (threshold, window) -> score
    std::optional<double> pearson, spearman;
    std::size_t n_cells = 0;
};

inline EvalReport eval_report(const GridField& pred, const GridField& obs,
                              const std::vector<double>& thresholds,
                              const std::vector<int>& fss_windows) {
    EvalReport rep;
    rep.rmse = rmse(pred, obs);
    rep.pearson = pearson(pred, obs);
    rep.spearman = spearman(pred, obs);
    for (std::size_t i = 0; i < pred.values.size(); ++i)
        if (!is_missing(pred.values[i]) && !is_missing(obs.values[i])) ++rep.n_cells;
    for (double t : thresholds) {
        const auto c = contingency(pred, obs, t);
        rep.csi[t] = csi(c);
        rep.pod[t] = pod(c);
        rep.far[t] = far(c);
        rep.freq_bias[t] = freq_bias(c);
        for (int w : fss_windows) rep.fss[{t, w}] = fss(pred, obs, t, w);
    }
    return rep;
}

} // namespace rainsplat
