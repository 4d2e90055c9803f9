#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "rainsplat/gaussian.hpp"
#include "rainsplat/grid.hpp"
#include "rainsplat/parallel.hpp"

namespace rainsplat {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct RenderConfig {
    double cutoff_k = 5.0;  // per-Gaussian support radius, Mahalanobis sigmas
    bool no_cull = false;   // render every Gaussian over the full grid
    bool deterministic = true;
    unsigned threads = 1;

    void validate() const {
        if (!no_cull && !(cutoff_k > 0.0)) throw data_error("render: cutoff_k must be > 0");
    }
};

// Partials of a scalar loss w.r.t. every Gaussian parameter.
struct RenderGradient {
    std::vector<double> d_mu_x, d_mu_y, d_sigma_x, d_sigma_y, d_rho, d_alpha;

    explicit RenderGradient(std::size_t n = 0)
        : d_mu_x(n, 0.0), d_mu_y(n, 0.0), d_sigma_x(n, 0.0), d_sigma_y(n, 0.0),
          d_rho(n, 0.0), d_alpha(n, 0.0) {}

    std::size_t size() const { return d_alpha.size(); }
};

struct RenderStats {
    std::uint64_t touched_cells = 0; // Gaussian-cell pairs actually evaluated
};

namespace detail {

// Closed-form 2x2 precision matrix: quadratic form
// q = A dx^2 + 2 B dx dy + C dy^2.
struct Precision {
    double A, B, C;

    explicit Precision(const Gaussian2D& g) {
        const double det = g.cov_det();
        if (!(det > 1e-300)) throw numeric_error("render: covariance determinant underflow");
        A = g.sigma_y * g.sigma_y / det;
        B = -g.rho * g.sigma_x * g.sigma_y / det;
        C = g.sigma_x * g.sigma_x / det;
    }

    double quad(double dx, double dy) const { return A * dx * dx + 2.0 * B * dx * dy + C * dy * dy; }
};

// Half-width of the axis-aligned box containing the cutoff_k ellipse:
// cutoff_k * sqrt(largest covariance eigenvalue).
inline double support_half_width(const Gaussian2D& g, double cutoff_k) {
    const double sx2 = g.sigma_x * g.sigma_x;
    const double sy2 = g.sigma_y * g.sigma_y;
    const double half_tr = 0.5 * (sx2 + sy2);
    const double disc = std::sqrt(0.25 * (sx2 - sy2) * (sx2 - sy2) + g.rho * g.rho * sx2 * sy2);
    return cutoff_k * std::sqrt(half_tr + disc);
}

struct CellBox {
    long r0, r1, c0, c1; // inclusive, already clipped; empty if r0 > r1
};

inline CellBox support_box(const Gaussian2D& g, const GridSpec& spec, double cutoff_k) {
    const double hw = support_half_width(g, cutoff_k);
    CellBox b;
    b.c0 = static_cast<long>(std::ceil((g.mu_x - hw - spec.origin_x) / spec.cell_size));
    b.c1 = static_cast<long>(std::floor((g.mu_x + hw - spec.origin_x) / spec.cell_size));
    b.r0 = static_cast<long>(std::ceil((g.mu_y - hw - spec.origin_y) / spec.cell_size));
    b.r1 = static_cast<long>(std::floor((g.mu_y + hw - spec.origin_y) / spec.cell_size));
    b.c0 = std::max(b.c0, 0L);
    b.r0 = std::max(b.r0, 0L);
    b.c1 = std::min(b.c1, static_cast<long>(spec.cols) - 1);
    b.r1 = std::min(b.r1, static_cast<long>(spec.rows) - 1);
    return b;
}

} // namespace detail

// Exact splatting sum at arbitrary query locations: no cutoff, every
// Gaussian contributes to every query.
inline std::vector<double> render_points(const GaussianSet& set, const std::vector<Point2>& queries) {
    set.validate();
    std::vector<double> out(queries.size(), 0.0);
    std::vector<detail::Precision> prec;
    prec.reserve(set.gaussians.size());
    for (const auto& g : set.gaussians) prec.emplace_back(g);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < set.gaussians.size(); ++i) {
            const auto& g = set.gaussians[i];
            const double dx = queries[q].x - g.mu_x;
            const double dy = queries[q].y - g.mu_y;
            acc += g.alpha * std::exp(-0.5 * prec[i].quad(dx, dy));
        }
        out[q] = acc;
    }
    return out;
}

inline double render_point(const GaussianSet& set, double x, double y) {
    return render_points(set, {{x, y}})[0];
}

// Culled renderer: each Gaussian contributes only inside its support box.
// Per-cell accumulation order is Gaussian-index order, so the result is
// independent of the thread count.
inline GridField render_selective(const GaussianSet& set, const GridSpec& target,
                                  const RenderConfig& cfg, RenderStats* stats = nullptr) {
    set.validate();
    target.validate();
    cfg.validate();
    GridField out(target, 0.0);
    const std::size_t n = set.gaussians.size();
    std::vector<detail::Precision> prec;
    prec.reserve(n);
    for (const auto& g : set.gaussians) prec.emplace_back(g);

    std::vector<detail::CellBox> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (cfg.no_cull) {
            boxes[i] = {0, static_cast<long>(target.rows) - 1, 0, static_cast<long>(target.cols) - 1};
        } else {
            boxes[i] = detail::support_box(set.gaussians[i], target, cfg.cutoff_k);
        }
    }

    std::atomic<std::uint64_t> touched{0};
    // row-chunk tiles; each cell is written by exactly one tile
    parallel_chunks(target.rows, 16, cfg.threads, [&](std::size_t row0, std::size_t row1) {
        std::uint64_t local_touched = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& g = set.gaussians[i];
            const auto& b = boxes[i];
            const long r0 = std::max(b.r0, static_cast<long>(row0));
            const long r1 = std::min(b.r1, static_cast<long>(row1) - 1);
            for (long r = r0; r <= r1; ++r) {
                const double dy = target.y_of(static_cast<std::size_t>(r)) - g.mu_y;
                double* row_ptr = out.values.data() + static_cast<std::size_t>(r) * target.cols;
                for (long c = b.c0; c <= b.c1; ++c) {
                    const double dx = target.x_of(static_cast<std::size_t>(c)) - g.mu_x;
                    row_ptr[c] += g.alpha * std::exp(-0.5 * prec[i].quad(dx, dy));
                    ++local_touched;
                }
            }
        }
        touched.fetch_add(local_touched);
    });
    if (stats) stats->touched_cells = touched.load();
    return out;
}

// Unculled grid render: render_points evaluated at every cell center.
inline GridField render_dense(const GaussianSet& set, const GridSpec& target, unsigned threads = 1) {
    RenderConfig cfg;
    cfg.no_cull = true;
    cfg.threads = threads;
    return render_selective(set, target, cfg);
}

// MSE loss of the rendered field against a target, with exact analytic
// partials. Missing target cells are skipped and excluded from the cell
// count. Gradient accumulation uses the same culling as render_selective.
inline std::pair<double, RenderGradient> render_gradient(const GaussianSet& set,
                                                         const GridField& target,
                                                         const RenderConfig& cfg) {
    set.validate();
    target.spec.validate();
    cfg.validate();
    const GridSpec& spec = target.spec;
    GridField rendered = render_selective(set, spec, cfg);

    std::vector<double> residual(spec.size(), 0.0);
    std::size_t n_valid = 0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double t = target.values[i];
        if (is_missing(t)) {
            residual[i] = 0.0;
            continue;
        }
        residual[i] = rendered.values[i] - t;
        sq_sum += residual[i] * residual[i];
        ++n_valid;
    }
    if (n_valid == 0) throw data_error("render_gradient: all target cells missing");
    const double mse = sq_sum / static_cast<double>(n_valid);
    const double scale = 2.0 / static_cast<double>(n_valid);

    const std::size_t n = set.gaussians.size();
    RenderGradient grad(n);
    parallel_chunks(n, 4, cfg.threads, [&](std::size_t g0, std::size_t g1) {
        for (std::size_t i = g0; i < g1; ++i) {
            const auto& g = set.gaussians[i];
            const detail::Precision p(g);
            const detail::CellBox b =
                cfg.no_cull
                    ? detail::CellBox{0, static_cast<long>(spec.rows) - 1, 0,
                                      static_cast<long>(spec.cols) - 1}
                    : detail::support_box(g, spec, cfg.cutoff_k);
            const double inv_sx = 1.0 / g.sigma_x;
            const double inv_sy = 1.0 / g.sigma_y;
            const double k = 1.0 / (1.0 - g.rho * g.rho);
            double acc_mx = 0, acc_my = 0, acc_sx = 0, acc_sy = 0, acc_rho = 0, acc_a = 0;
            for (long r = b.r0; r <= b.r1; ++r) {
                const double dy = spec.y_of(static_cast<std::size_t>(r)) - g.mu_y;
                const std::size_t row_off = static_cast<std::size_t>(r) * spec.cols;
                for (long c = b.c0; c <= b.c1; ++c) {
                    const std::size_t idx = row_off + static_cast<std::size_t>(c);
                    if (is_missing(target.values[idx])) continue;
                    const double res = residual[idx];
                    if (res == 0.0) continue;
                    const double dx = spec.x_of(static_cast<std::size_t>(c)) - g.mu_x;
                    const double q = p.quad(dx, dy);
                    const double e = std::exp(-0.5 * q);
                    const double w = res * g.alpha * e;
                    // dI/dmu = g * (precision . d)
                    acc_mx += w * (p.A * dx + p.B * dy);
                    acc_my += w * (p.B * dx + p.C * dy);
                    // dq/dsigma and dq/drho in closed form
                    const double nx = dx * inv_sx;
                    const double ny = dy * inv_sy;
                    const double dq_dsx = -2.0 * inv_sx * k * (nx * nx - g.rho * nx * ny);
                    const double dq_dsy = -2.0 * inv_sy * k * (ny * ny - g.rho * nx * ny);
                    const double m = nx * nx - 2.0 * g.rho * nx * ny + ny * ny;
                    const double dq_drho = 2.0 * k * (g.rho * k * m - nx * ny);
                    acc_sx += w * (-0.5 * dq_dsx);
                    acc_sy += w * (-0.5 * dq_dsy);
                    acc_rho += w * (-0.5 * dq_drho);
                    acc_a += res * e;
                }
            }
            grad.d_mu_x[i] = scale * acc_mx;
            grad.d_mu_y[i] = scale * acc_my;
            grad.d_sigma_x[i] = scale * acc_sx;
            grad.d_sigma_y[i] = scale * acc_sy;
            grad.d_rho[i] = scale * acc_rho;
            grad.d_alpha[i] = scale * acc_a;
        }
    });
    return {mse, std::move(grad)};
}

} // namespace rainsplat
