#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rainsplat/gaussian.hpp"
#include "rainsplat/sample.hpp"
#include "rainsplat/splat.hpp"
#include "rainsplat/stations.hpp"

namespace rainsplat {

enum class LrSchedule { constant, cosine };

struct FitConfig {
    double lambda_sigma = 1e-3;
    double lambda_alpha = 1e-4;
    std::size_t max_iters = 2000;
    double learning_rate = 1e-2;
    LrSchedule lr_schedule = LrSchedule::cosine;
    double grad_clip = 1.0;     // global-norm clip on the reparameterized gradient
    double init_sigma = 3.0;    // grid units; default 2x the default NMS radius
    double tol_rel = 1e-6;      // early stop on relative loss change...
    std::size_t tol_window = 50; // ...over this many iterations
    bool freeze_anchor_all = false; // freeze mu and sigma of anchors too, not just alpha
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lambda_sigma >= 0.0 && lambda_alpha >= 0.0))
            throw data_error("fit: lambdas must be >= 0");
        if (max_iters < 1) throw data_error("fit: max_iters must be >= 1");
        if (!(learning_rate > 0.0)) throw data_error("fit: learning_rate must be > 0");
        if (!(grad_clip > 0.0)) throw data_error("fit: grad_clip must be > 0");
        if (!(init_sigma > 0.0)) throw data_error("fit: init_sigma must be > 0");
        if (!(tol_rel > 0.0)) throw data_error("fit: tol_rel must be > 0");
    }
};

enum class StopReason { max_iters, converged, diverged };

struct LossRecord {
    std::size_t iter;
    double mse;
    double reg_sigma;
    double reg_alpha;
    double total() const { return mse + reg_sigma + reg_alpha; }
};

struct FitResult {
    GaussianSet set;
    std::vector<LossRecord> loss_history;
    StopReason stopped_reason = StopReason::max_iters;
};

// One isotropic Gaussian per sample point plus one anchored Gaussian per
// nonzero-rainfall ok-station (amplitude pinned to the observed value).
inline GaussianSet init_gaussians(const std::vector<SamplePoint>& points,
                                  const StationSet& anchors, const FitConfig& cfg,
                                  GridSpec frame = {}) {
    cfg.validate();
    anchors.validate();
    GaussianSet set;
    set.frame = frame;
    for (const auto& p : points) {
        Gaussian2D g;
        g.mu_x = p.x;
        g.mu_y = p.y;
        g.sigma_x = g.sigma_y = cfg.init_sigma;
        g.rho = 0.0;
        g.alpha = std::max(p.value, 0.0);
        g.anchored = false;
        set.gaussians.push_back(g);
    }
    for (const auto& s : anchors.stations) {
        if (s.quality != Quality::ok || s.value <= 0.0) continue;
        Gaussian2D g;
        g.mu_x = s.x;
        g.mu_y = s.y;
        g.sigma_x = g.sigma_y = cfg.init_sigma;
        g.rho = 0.0;
        g.alpha = s.value;
        g.anchored = true;
        set.gaussians.push_back(g);
    }
    if (set.gaussians.empty())
        throw data_error("init_gaussians: no sample points and no nonzero stations");
    return set;
}

struct LossParts {
    double total;
    double mse;
    double reg_sigma;
    double reg_alpha;
};

inline LossParts total_loss(const GaussianSet& set, const GridField& target, const FitConfig& cfg,
                            const RenderConfig& rcfg) {
    cfg.validate();
    double reg_sigma = 0.0, reg_alpha = 0.0;
    for (const auto& g : set.gaussians) {
        reg_sigma += cfg.lambda_sigma * (g.sigma_x + g.sigma_y);
        reg_alpha += cfg.lambda_alpha * g.alpha;
    }
    GridField rendered = render_selective(set, target.spec, rcfg);
    double sq = 0.0;
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < target.values.size(); ++i) {
        if (is_missing(target.values[i])) continue;
        const double r = rendered.values[i] - target.values[i];
        sq += r * r;
        ++n_valid;
    }
    if (n_valid == 0) throw data_error("total_loss: all target cells missing");
    const double mse = sq / static_cast<double>(n_valid);
    return {mse + reg_sigma + reg_alpha, mse, reg_sigma, reg_alpha};
}

namespace detail {

// Unconstrained reparameterization: sigma = exp(u), rho = tanh(v),
// alpha = exp(w). Keeps every iterate inside the Gaussian2D invariants.
struct ParamVec {
    std::vector<double> v; // 6 per Gaussian: mu_x, mu_y, u_sx, u_sy, v_rho, w_alpha

    static constexpr double alpha_floor = 1e-6;
    static constexpr double rho_cap = 0.999;

    static ParamVec from_set(const GaussianSet& set) {
        ParamVec p;
        p.v.reserve(set.gaussians.size() * 6);
        for (const auto& g : set.gaussians) {
            p.v.push_back(g.mu_x);
            p.v.push_back(g.mu_y);
            p.v.push_back(std::log(g.sigma_x));
            p.v.push_back(std::log(g.sigma_y));
            p.v.push_back(std::atanh(std::clamp(g.rho, -rho_cap, rho_cap)));
            p.v.push_back(std::log(std::max(g.alpha, alpha_floor)));
        }
        return p;
    }

    // Anchored amplitudes are restored bitwise from `ref`, never recomputed.
    void to_set(GaussianSet& set) const {
        for (std::size_t i = 0; i < set.gaussians.size(); ++i) {
            auto& g = set.gaussians[i];
            const double* p = &v[i * 6];
            g.mu_x = p[0];
            g.mu_y = p[1];
            g.sigma_x = std::exp(p[2]);
            g.sigma_y = std::exp(p[3]);
            g.rho = std::tanh(p[4]);
            if (!g.anchored) g.alpha = std::exp(p[5]);
        }
    }
};

} // namespace detail

// Per-scene optimization of Gaussian parameters with an adaptive-moment
// first-order method on the reparameterized variables. Anchored amplitudes
// stay bitwise fixed; gradients are clipped in global norm each step. The
// returned set is the iterate with the lowest total loss.
inline FitResult fit(const GaussianSet& init, const GridField& target, const FitConfig& cfg,
                     RenderConfig rcfg) {
    cfg.validate();
    init.validate();
    target.spec.validate();

    FitResult result;
    result.set = init;
    const std::size_t n = init.gaussians.size();
    const std::size_t dim = n * 6;

    detail::ParamVec params = detail::ParamVec::from_set(result.set);
    std::vector<double> m(dim, 0.0), s(dim, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    detail::ParamVec best_params = params;
    double best_total = std::numeric_limits<double>::infinity();
    double best_mse = std::numeric_limits<double>::infinity();
    double initial_mse = 0.0;

    result.stopped_reason = StopReason::max_iters;
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        params.to_set(result.set);
        auto [mse, grad] = render_gradient(result.set, target, rcfg);
        double reg_sigma = 0.0, reg_alpha = 0.0;
        for (const auto& g : result.set.gaussians) {
            reg_sigma += cfg.lambda_sigma * (g.sigma_x + g.sigma_y);
            reg_alpha += cfg.lambda_alpha * g.alpha;
        }
        const double total = mse + reg_sigma + reg_alpha;

        if (!std::isfinite(total)) {
            result.stopped_reason = StopReason::diverged;
            break;
        }
        result.loss_history.push_back({iter, mse, reg_sigma, reg_alpha});
        if (iter == 0) initial_mse = mse;
        if (total < best_total) {
            best_total = total;
            best_mse = mse;
            best_params = params;
        }

        // early stop on a flat loss trend
        if (cfg.tol_window > 0 && result.loss_history.size() > cfg.tol_window) {
            const double prev =
                result.loss_history[result.loss_history.size() - 1 - cfg.tol_window].total();
            const double denom = std::max(std::abs(prev), 1e-30);
            if (std::abs(prev - total) / denom < cfg.tol_rel) {
                result.stopped_reason = StopReason::converged;
                break;
            }
        }

        // chain rule into the unconstrained variables, regularizers included
        std::vector<double> g(dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& gs = result.set.gaussians[i];
            const bool frozen_all = gs.anchored && cfg.freeze_anchor_all;
            if (!frozen_all) {
                g[i * 6 + 0] = grad.d_mu_x[i];
                g[i * 6 + 1] = grad.d_mu_y[i];
                g[i * 6 + 2] = (grad.d_sigma_x[i] + cfg.lambda_sigma) * gs.sigma_x;
                g[i * 6 + 3] = (grad.d_sigma_y[i] + cfg.lambda_sigma) * gs.sigma_y;
                g[i * 6 + 4] = grad.d_rho[i] * (1.0 - gs.rho * gs.rho);
            }
            if (!gs.anchored)
                g[i * 6 + 5] = (grad.d_alpha[i] + cfg.lambda_alpha) * gs.alpha;
        }
        double norm2 = 0.0;
        for (double gi : g) norm2 += gi * gi;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.grad_clip) {
            const double scale = cfg.grad_clip / norm;
            for (double& gi : g) gi *= scale;
        }

        double lr = cfg.learning_rate;
        if (cfg.lr_schedule == LrSchedule::cosine)
            lr *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(iter) /
                                        static_cast<double>(cfg.max_iters)));
        const double t = static_cast<double>(iter + 1);
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for (std::size_t j = 0; j < dim; ++j) {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            s[j] = beta2 * s[j] + (1.0 - beta2) * g[j] * g[j];
            params.v[j] -= lr * (m[j] / bc1) / (std::sqrt(s[j] / bc2) + adam_eps);
        }
    }

    // return the best iterate; fall back to the start if nothing improved
    if (!result.loss_history.empty() && std::isfinite(best_total) && best_mse <= initial_mse) {
        best_params.to_set(result.set);
        // fully frozen anchors come back bitwise, not via log/exp round-trip
        if (cfg.freeze_anchor_all)
            for (std::size_t i = 0; i < n; ++i)
                if (init.gaussians[i].anchored) result.set.gaussians[i] = init.gaussians[i];
    } else {
        result.set = init;
    }
    if (result.loss_history.empty())
        result.loss_history.push_back({0, missing_value(), 0.0, 0.0});
    return result;
}

inline void write_loss_history(const std::vector<LossRecord>& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("fit: cannot open loss history for writing: " + path);
    os << "iter,mse,reg_sigma,reg_alpha,total\n";
    char buf[200];
    for (const auto& rec : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g", rec.iter, rec.mse,
                      rec.reg_sigma, rec.reg_alpha, rec.total());
        os << buf << "\n";
    }
    if (!os) throw io_error("fit: loss history write failed: " + path);
}

} // namespace rainsplat
