#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rainsplat/sample.hpp"

using namespace rainsplat;

TEST_CASE("support mask is strict-greater-than tau and missing-aware") {
    GridSpec spec{0, 0, 1.0, 1, 4};
    GridField f(spec);
    f.values = {0.1, 0.1000001, missing_value(), 5.0};
    auto mask = support_mask(f, 0.1);
    REQUIRE(mask == std::vector<bool>{false, true, false, true});
}

TEST_CASE("gradient magnitude of a constant field is zero") {
    GridField f(GridSpec{0, 0, 1.0, 5, 5}, 7.0);
    auto g = gradient_magnitude(f);
    for (double v : g.values) REQUIRE(v == 0.0);
}

TEST_CASE("gradient magnitude of linear ramps matches the slope") {
    GridSpec spec{0, 0, 0.5, 4, 4};
    SECTION("x ramp") {
        GridField f(spec);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) f.at(r, c) = 3.0 * static_cast<double>(c);
        auto g = gradient_magnitude(f);
        // slope is 3 per cell = 6 per unit; central and one-sided agree on a ramp
        for (double v : g.values) REQUIRE(v == Catch::Approx(6.0).epsilon(1e-12));
    }
    SECTION("diagonal ramp, interior stencil") {
        GridField f(spec);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                f.at(r, c) = 2.0 * static_cast<double>(r) + static_cast<double>(c);
        auto g = gradient_magnitude(f);
        const double want = std::sqrt(4.0 * 4.0 + 2.0 * 2.0); // per-unit slopes (4, 2)
        REQUIRE(g.at(1, 1) == Catch::Approx(want).epsilon(1e-12));
        REQUIRE(g.at(2, 2) == Catch::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("missing cells propagate and missing neighbors contribute nothing") {
    GridSpec spec{0, 0, 1.0, 1, 3};
    GridField f(spec);
    f.values = {1.0, missing_value(), 5.0};
    auto g = gradient_magnitude(f);
    REQUIRE(g.values[0] == 0.0);
    REQUIRE(is_missing(g.values[1]));
    REQUIRE(g.values[2] == 0.0);
}

TEST_CASE("uniform-only mixture spreads mass evenly over the mask") {
    GridSpec spec{0, 0, 1.0, 2, 2};
    GridField f(spec);
    f.values = {1.0, 2.0, 3.0, 4.0};
    SamplingConfig cfg;
    cfg.tau = 0.0;
    cfg.w_grad = 0.0;
    cfg.w_uniform = 1.0;
    cfg.w_heavy = 0.0;
    auto p = sampling_distribution(f, cfg);
    for (double v : p) REQUIRE(v == Catch::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("heavy-only mixture is the intensity softmax and symmetric under ties") {
    GridSpec spec{0, 0, 1.0, 1, 4};
    GridField f(spec);
    f.values = {2.0, 5.0, 2.0, 5.0};
    SamplingConfig cfg;
    cfg.w_grad = 0.0;
    cfg.w_uniform = 0.0;
    cfg.w_heavy = 1.0;
    cfg.temperature = 1.5;
    auto p = sampling_distribution(f, cfg);
    REQUIRE(p[0] == Catch::Approx(p[2]).epsilon(1e-14));
    REQUIRE(p[1] == Catch::Approx(p[3]).epsilon(1e-14));
    const double e2 = std::exp(2.0 / 1.5), e5 = std::exp(5.0 / 1.5);
    REQUIRE(p[1] == Catch::Approx(e5 / (2 * e2 + 2 * e5)).epsilon(1e-9));
    double sum = 0.0;
    for (double v : p) sum += v;
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mixed mixture on a 1x3 strip matches a hand computation") {
    GridSpec spec{0, 0, 1.0, 1, 3};
    GridField f(spec);
    f.values = {0.0, 2.0, 4.0}; // one-sided/central gradient magnitude is 2 everywhere
    SamplingConfig cfg;
    cfg.tau = 1.0;
    cfg.w_grad = 0.3;
    cfg.w_uniform = 0.4;
    cfg.w_heavy = 0.3;
    cfg.temperature = 1.0;
    auto p = sampling_distribution(f, cfg);

    const double h0 = std::exp(-4.0), h1 = std::exp(-2.0), h2 = 1.0;
    const double hs = h0 + h1 + h2;
    const double want0 = 0.3 * h0 / hs;
    const double want1 = 0.4 / 2.0 + 0.3 * 2.0 / 4.0 + 0.3 * h1 / hs;
    const double want2 = 0.4 / 2.0 + 0.3 * 2.0 / 4.0 + 0.3 * h2 / hs;
    REQUIRE(p[0] == Catch::Approx(want0).epsilon(1e-6));
    REQUIRE(p[1] == Catch::Approx(want1).epsilon(1e-6));
    REQUIRE(p[2] == Catch::Approx(want2).epsilon(1e-6));
    REQUIRE(p[0] + p[1] + p[2] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("heavy term ignores the mask by default but can be restricted") {
    GridSpec spec{0, 0, 1.0, 1, 2};
    GridField f(spec);
    f.values = {0.05, 3.0}; // first cell below tau
    SamplingConfig cfg;
    cfg.w_grad = 0.0;
    cfg.w_uniform = 0.0;
    cfg.w_heavy = 1.0;
    auto p = sampling_distribution(f, cfg);
    REQUIRE(p[0] > 0.0);

    cfg.mask_heavy = true;
    auto q = sampling_distribution(f, cfg);
    REQUIRE(q[0] == 0.0);
    REQUIRE(q[1] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("empty mask with no heavy weight has no mass") {
    GridField f(GridSpec{0, 0, 1.0, 2, 2}, 0.0);
    SamplingConfig cfg;
    cfg.w_grad = 0.5;
    cfg.w_uniform = 0.5;
    cfg.w_heavy = 0.0;
    REQUIRE_THROWS_AS(sampling_distribution(f, cfg), data_error);
    // with heavy weight the zero field is still sampleable
    cfg.w_uniform = 0.2;
    cfg.w_heavy = 0.3;
    auto p = sampling_distribution(f, cfg);
    for (double v : p) REQUIRE(v == Catch::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("draws are deterministic per seed") {
    GridSpec spec{0, 0, 1.0, 16, 16};
    GridField f(spec);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (double& v : f.values) v = u(rng);
    SamplingConfig cfg;
    cfg.k_points = 40;
    cfg.seed = 123;
    auto p = sampling_distribution(f, cfg);
    auto a = draw_points(p, f, cfg);
    auto b = draw_points(p, f, cfg);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        REQUIRE(a.points[i].x == b.points[i].x);
        REQUIRE(a.points[i].y == b.points[i].y);
        REQUIRE(a.points[i].value == b.points[i].value);
        REQUIRE(a.points[i].prob == b.points[i].prob);
    }
    cfg.seed = 124;
    auto c = draw_points(p, f, cfg);
    bool any_diff = false;
    for (std::size_t i = 0; i < std::min(a.points.size(), c.points.size()); ++i)
        if (a.points[i].x != c.points[i].x || a.points[i].y != c.points[i].y) any_diff = true;
    REQUIRE(any_diff);
}

TEST_CASE("single positive cell yields one point and a truncation flag") {
    GridSpec spec{0, 0, 1.0, 1, 1};
    GridField f(spec, 5.0);
    SamplingConfig cfg;
    cfg.k_points = 3;
    cfg.nms_radius = 0.0;
    auto p = sampling_distribution(f, cfg);
    auto res = draw_points(p, f, cfg);
    REQUIRE(res.points.size() == 1);
    REQUIRE(res.truncated);
    REQUIRE(res.points[0].x == 0.0);
    REQUIRE(res.points[0].value == 5.0);
    REQUIRE(res.points[0].prob == Catch::Approx(1.0));
}

TEST_CASE("first-draw frequencies converge to the proposal distribution") {
    GridSpec spec{0, 0, 1.0, 8, 8};
    GridField f(spec);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (double& v : f.values) v = u(rng);
    SamplingConfig cfg;
    cfg.k_points = 1;
    cfg.nms_radius = 0.0;
    auto p = sampling_distribution(f, cfg);

    const std::size_t n_draws = 1000000;
    std::vector<double> counts(p.size(), 0.0);
    for (std::size_t d = 0; d < n_draws; ++d) {
        cfg.seed = d;
        auto res = draw_points(p, f, cfg);
        REQUIRE(res.points.size() == 1);
        const std::size_t c = spec.col_of(res.points[0].x);
        const std::size_t r = spec.row_of(res.points[0].y);
        counts[r * spec.cols + c] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        tv += std::abs(counts[i] / static_cast<double>(n_draws) - p[i]);
    REQUIRE(0.5 * tv < 0.01);
}

TEST_CASE("accepted points respect the suppression radius") {
    GridSpec spec{0, 0, 1.0, 32, 32};
    GridField f(spec);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 9.0);
    for (double& v : f.values) v = u(rng);
    SamplingConfig cfg;
    cfg.k_points = 120;
    cfg.nms_radius = 2.5;
    cfg.seed = 77;
    auto p = sampling_distribution(f, cfg);
    auto res = draw_points(p, f, cfg);
    REQUIRE(res.points.size() >= 2);
    for (std::size_t i = 0; i < res.points.size(); ++i)
        for (std::size_t j = i + 1; j < res.points.size(); ++j) {
            const double dx = res.points[i].x - res.points[j].x;
            const double dy = res.points[i].y - res.points[j].y;
            REQUIRE(std::sqrt(dx * dx + dy * dy) >= cfg.nms_radius - 1e-12);
        }
}

TEST_CASE("colder softmax concentrates on the peak; hotter flattens") {
    GridSpec spec{0, 0, 1.0, 4, 4};
    GridField f(spec);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (double& v : f.values) v = u(rng);
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] > f.values[argmax]) argmax = i;

    SamplingConfig cfg;
    cfg.w_grad = 0.0;
    cfg.w_uniform = 0.0;
    cfg.w_heavy = 1.0;

    cfg.temperature = 0.05;
    auto cold = sampling_distribution(f, cfg);
    REQUIRE(cold[argmax] > 0.99);

    cfg.temperature = 1000.0;
    auto hot = sampling_distribution(f, cfg);
    for (double v : hot) REQUIRE(v == Catch::Approx(1.0 / 16.0).epsilon(1e-2));
}

TEST_CASE("invalid configs are rejected") {
    SamplingConfig cfg;
    cfg.w_uniform = 0.5; // weights now sum to 1.1
    REQUIRE_THROWS_AS(cfg.validate(), data_error);
    cfg = {};
    cfg.temperature = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), data_error);
    cfg = {};
    cfg.k_points = 0;
    REQUIRE_THROWS_AS(cfg.validate(), data_error);

    GridField f(GridSpec{0, 0, 1.0, 2, 2}, 1.0);
    std::vector<double> bad = {0.5, 0.5, 0.5, 0.5};
    REQUIRE_THROWS_AS(draw_points(bad, f, SamplingConfig{}), data_error);
}
