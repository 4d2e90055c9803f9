#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "rainsplat/gaussian.hpp"
#include "rainsplat/splat.hpp"
#include "rainsplat/stations.hpp"

namespace rainsplat {

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n_blobs = 10;
    GridSpec spec{0.0, 0.0, 1.0, 64, 64};
    double amp_lo = 1.0, amp_hi = 10.0;       // mm/h
    double sigma_lo = 1.5, sigma_hi = 4.0;    // grid units
    double rho_lo = -0.5, rho_hi = 0.5;
    double background = 0.0;

    void validate() const {
        spec.validate();
        if (!(amp_lo <= amp_hi) || amp_lo < 0.0) throw data_error("synth: bad amp range");
        if (!(sigma_lo > 0.0 && sigma_lo <= sigma_hi)) throw data_error("synth: bad sigma range");
        if (!(rho_lo > -1.0 && rho_lo <= rho_hi && rho_hi < 1.0))
            throw data_error("synth: bad rho range");
        if (!(background >= 0.0)) throw data_error("synth: background must be >= 0");
    }
};

struct SynthScene {
    GaussianSet set;
    GridField field;
};

// Random scene of known Gaussians plus the field rendered from it; the
// centers stay at least 3*sigma_hi away from the borders.
inline SynthScene synth_scene(const SynthConfig& cfg) {
    cfg.validate();
    const GridSpec& spec = cfg.spec;
    const double margin = 3.0 * cfg.sigma_hi;
    const double x0 = spec.origin_x + margin;
    const double x1 = spec.x_of(spec.cols - 1) - margin;
    const double y0 = spec.origin_y + margin;
    const double y1 = spec.y_of(spec.rows - 1) - margin;
    if (cfg.n_blobs > 0 && (x1 <= x0 || y1 <= y0))
        throw data_error("synth: grid too small for the 3*sigma border margin");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
    std::uniform_real_distribution<double> uamp(cfg.amp_lo, cfg.amp_hi);
    std::uniform_real_distribution<double> usigma(cfg.sigma_lo, cfg.sigma_hi);
    std::uniform_real_distribution<double> urho(cfg.rho_lo, cfg.rho_hi);

    SynthScene scene;
    scene.set.frame = spec;
    for (std::size_t i = 0; i < cfg.n_blobs; ++i) {
        Gaussian2D g;
        g.mu_x = ux(rng);
        g.mu_y = uy(rng);
        g.alpha = uamp(rng);
        g.sigma_x = usigma(rng);
        g.sigma_y = usigma(rng);
        g.rho = urho(rng);
        scene.set.gaussians.push_back(g);
    }
    scene.field = render_dense(scene.set, spec);
    if (cfg.background != 0.0)
        for (double& v : scene.field.values) v += cfg.background;
    return scene;
}

// Uniform station subsample of a field: n distinct cells, optional
// Gaussian observation noise (clamped at 0) and a fixed fraction of
// quality=missing stations.
inline StationSet synth_stations(const GridField& field, std::size_t n, double noise_sd,
                                 double missing_frac, std::uint64_t seed) {
    field.spec.validate();
    if (!(noise_sd >= 0.0)) throw data_error("synth_stations: noise_sd must be >= 0");
    if (!(missing_frac >= 0.0 && missing_frac < 1.0))
        throw data_error("synth_stations: missing_frac must be in [0, 1)");
    const std::size_t cells = field.spec.size();
    if (n > cells) throw data_error("synth_stations: more stations than cells");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(cells);
    for (std::size_t i = 0; i < cells; ++i) idx[i] = i;
    // partial Fisher-Yates for the first n cells
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, cells - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::normal_distribution<double> noise(0.0, noise_sd);

    StationSet set;
    const std::size_t n_missing = static_cast<std::size_t>(missing_frac * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = idx[i];
        const std::size_t r = cell / field.spec.cols;
        const std::size_t c = cell % field.spec.cols;
        StationObs obs;
        obs.id = "s" + std::to_string(i);
        obs.x = field.spec.x_of(c);
        obs.y = field.spec.y_of(r);
        double v = field.at(r, c);
        if (is_missing(v)) v = 0.0;
        if (noise_sd > 0.0) v += noise(rng);
        obs.value = std::max(v, 0.0);
        obs.quality = (i < n_missing) ? Quality::missing : Quality::ok;
        set.stations.push_back(std::move(obs));
    }
    return set;
}

} // namespace rainsplat
