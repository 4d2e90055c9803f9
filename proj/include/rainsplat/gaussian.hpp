#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rainsplat/errors.hpp"
#include "rainsplat/grid.hpp"
#include "rainsplat/stations.hpp"

namespace rainsplat {

// One anisotropic splat primitive. Covariance is parameterized as
// [[sx^2, rho*sx*sy], [rho*sx*sy, sy^2]], positive definite for
// sx,sy > 0 and |rho| < 1. Anchored primitives keep their amplitude
// fixed during optimization.
struct Gaussian2D {
    double mu_x = 0.0;
    double mu_y = 0.0;
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double rho = 0.0;
    double alpha = 0.0; // mm/h amplitude
    bool anchored = false;

    double cov_det() const {
        return sigma_x * sigma_x * sigma_y * sigma_y * (1.0 - rho * rho);
    }

    void validate() const {
        if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
            throw numeric_error("gaussian: sigma must be > 0");
        if (!(rho > -1.0 && rho < 1.0))
            throw numeric_error("gaussian: rho must be in (-1, 1)");
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw numeric_error("gaussian: alpha must be finite and >= 0");
        if (!(cov_det() > 1e-300))
            throw numeric_error("gaussian: covariance determinant underflow");
    }
};

struct GaussianSet {
    std::vector<Gaussian2D> gaussians;
    GridSpec frame; // coordinate frame the scene was fit in

    void validate() const {
        for (const auto& g : gaussians) g.validate();
    }
};

// CSV: mu_x,mu_y,sigma_x,sigma_y,rho,alpha,anchored
inline void write_gaussians(const GaussianSet& set, const std::string& path) {
    set.validate();
    std::ofstream os(path);
    if (!os) throw io_error("gaussians: cannot open for writing: " + path);
    os << "mu_x,mu_y,sigma_x,sigma_y,rho,alpha,anchored\n";
    char buf[256];
    for (const auto& g : set.gaussians) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d", g.mu_x, g.mu_y,
                      g.sigma_x, g.sigma_y, g.rho, g.alpha, g.anchored ? 1 : 0);
        os << buf << "\n";
    }
    if (!os) throw io_error("gaussians: write failed: " + path);
}

inline GaussianSet read_gaussians(const std::string& path, GridSpec frame = {}) {
    std::ifstream is(path);
    if (!is) throw io_error("gaussians: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw io_error("gaussians: empty file: " + path);
    GaussianSet set;
    set.frame = frame;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 7) throw io_error("gaussians: expected 7 columns in " + path);
        Gaussian2D g;
        try {
            g.mu_x = std::stod(f[0]);
            g.mu_y = std::stod(f[1]);
            g.sigma_x = std::stod(f[2]);
            g.sigma_y = std::stod(f[3]);
            g.rho = std::stod(f[4]);
            g.alpha = std::stod(f[5]);
            g.anchored = std::stoi(f[6]) != 0;
        } catch (const std::logic_error&) {
            throw io_error("gaussians: unparsable row in " + path);
        }
        set.gaussians.push_back(g);
    }
    set.validate();
    return set;
}

} // namespace rainsplat
