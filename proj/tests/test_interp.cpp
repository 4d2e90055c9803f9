#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "rainsplat/interp.hpp"

using namespace rainsplat;

namespace {

StationSet make_stations(std::vector<StationObs> obs) {
    StationSet set;
    set.stations = std::move(obs);
    return set;
}

StationSet random_stations(std::size_t n, double extent, std::uint64_t seed,
                           double lo = 0.0, double hi = 10.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> up(0.0, extent);
    std::uniform_real_distribution<double> uv(lo, hi);
    StationSet set;
    for (std::size_t i = 0; i < n; ++i)
        set.stations.push_back({"s" + std::to_string(i), up(rng), up(rng), uv(rng), Quality::ok});
    return set;
}

// Plain Gaussian elimination with partial pivoting, independent of Eigen.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

} // namespace

TEST_CASE("single-station Barnes analysis is constant inside the cutoff") {
    auto st = make_stations({{"a", 4.0, 4.0, 3.25, Quality::ok}});
    GridSpec spec{0, 0, 1.0, 9, 9};
    BarnesConfig cfg;
    cfg.sigma = 2.0;
    auto f = barnes(st, spec, cfg);
    for (double v : f.values) REQUIRE(v == Catch::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("cells beyond 8 sigma of every station are missing") {
    auto st = make_stations({{"a", 0.0, 0.0, 1.0, Quality::ok}});
    GridSpec spec{0, 0, 1.0, 1, 20};
    BarnesConfig cfg;
    cfg.sigma = 1.0;
    auto f = barnes(st, spec, cfg);
    REQUIRE_FALSE(is_missing(f.at(0, 8)));  // distance 8 is inside (<=)
    REQUIRE(is_missing(f.at(0, 9)));
}

TEST_CASE("Barnes is symmetric for equidistant stations") {
    auto st = make_stations({{"a", 0.0, 0.0, 2.0, Quality::ok}, {"b", 8.0, 0.0, 6.0, Quality::ok}});
    GridSpec spec{4.0, 0.0, 1.0, 1, 1}; // single cell at the midpoint
    BarnesConfig cfg;
    cfg.sigma = 3.0;
    auto f = barnes(st, spec, cfg);
    REQUIRE(f.at(0, 0) == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("single-pass Barnes matches the direct weighted-mean oracle") {
    auto st = random_stations(12, 16.0, 21);
    GridSpec spec{0, 0, 1.0, 16, 16};
    BarnesConfig cfg;
    cfg.sigma = 2.5;
    auto f = barnes(st, spec, cfg);
    for (std::size_t r = 0; r < spec.rows; r += 3)
        for (std::size_t c = 0; c < spec.cols; c += 3) {
            const double x = spec.x_of(c), y = spec.y_of(r);
            double num = 0.0, den = 0.0;
            for (const auto& s : st.stations) {
                const double d2 = (x - s.x) * (x - s.x) + (y - s.y) * (y - s.y);
                if (d2 > 64.0 * cfg.sigma * cfg.sigma) continue;
                const double w = std::exp(-d2 / (2.0 * cfg.sigma * cfg.sigma));
                num += w * s.value;
                den += w;
            }
            REQUIRE(f.at(r, c) == Catch::Approx(num / den).epsilon(1e-12));
        }
}

TEST_CASE("single-pass Barnes stays within the station value range") {
    auto st = random_stations(10, 20.0, 33, 1.0, 9.0);
    GridSpec spec{0, 0, 1.0, 20, 20};
    BarnesConfig cfg;
    cfg.sigma = 3.0;
    auto f = barnes(st, spec, cfg);
    for (double v : f.values) {
        if (is_missing(v)) continue;
        REQUIRE(v >= 1.0 - 1e-12);
        REQUIRE(v <= 9.0 + 1e-12);
    }
}

TEST_CASE("a correction pass shrinks the station-location error") {
    auto st = random_stations(15, 30.0, 44);
    // snap stations onto cell centers so the analysis is readable off the grid
    for (auto& s : st.stations) {
        s.x = std::round(s.x);
        s.y = std::round(s.y);
    }
    // snapping may collide; drop duplicates
    std::sort(st.stations.begin(), st.stations.end(), [](const auto& a, const auto& b) {
        return std::make_pair(a.x, a.y) < std::make_pair(b.x, b.y);
    });
    st.stations.erase(std::unique(st.stations.begin(), st.stations.end(),
                                  [](const auto& a, const auto& b) {
                                      return a.x == b.x && a.y == b.y;
                                  }),
                      st.stations.end());

    GridSpec spec{0, 0, 1.0, 31, 31};
    BarnesConfig one, two;
    one.sigma = two.sigma = 4.0;
    one.passes = 1;
    two.passes = 2;
    auto f1 = barnes(st, spec, one);
    auto f2 = barnes(st, spec, two);
    double e1 = 0.0, e2 = 0.0;
    for (const auto& s : st.stations) {
        const auto r = static_cast<std::size_t>(spec.row_of(s.y));
        const auto c = static_cast<std::size_t>(spec.col_of(s.x));
        e1 += std::abs(f1.at(r, c) - s.value);
        e2 += std::abs(f2.at(r, c) - s.value);
    }
    REQUIRE(e2 < e1);
}

TEST_CASE("suspect and missing stations are excluded") {
    auto st = make_stations({{"a", 2.0, 2.0, 1.0, Quality::ok},
                             {"b", 2.0, 2.0, 100.0, Quality::suspect},
                             {"c", 3.0, 3.0, 100.0, Quality::missing}});
    GridSpec spec{0, 0, 1.0, 5, 5};
    BarnesConfig cfg;
    cfg.sigma = 2.0;
    auto f = barnes(st, spec, cfg);
    for (double v : f.values) REQUIRE(v == Catch::Approx(1.0));
    StationSet none = make_stations({{"a", 0, 0, 1.0, Quality::suspect}});
    REQUIRE_THROWS_AS(barnes(none, spec, cfg), data_error);
}

TEST_CASE("variogram model closed forms") {
    VariogramModel m;
    m.kind = VariogramKind::exponential;
    m.nugget = 0.5;
    m.sill = 2.5;
    m.range = 6.0;
    REQUIRE(m(0.0) == 0.0);
    REQUIRE(m(6.0) == Catch::Approx(0.5 + 2.0 * (1.0 - std::exp(-3.0))).epsilon(1e-14));
    m.kind = VariogramKind::spherical;
    REQUIRE(m(3.0) == Catch::Approx(0.5 + 2.0 * (1.5 * 0.5 - 0.5 * 0.125)).epsilon(1e-14));
    REQUIRE(m(6.0) == 2.5);
    REQUIRE(m(100.0) == 2.5);
}

TEST_CASE("variogram fit falls back on degenerate inputs") {
    auto flat = make_stations({{"a", 0, 0, 2.0, Quality::ok},
                               {"b", 5, 0, 2.0, Quality::ok},
                               {"c", 0, 5, 2.0, Quality::ok}});
    auto m = fit_variogram(flat);
    REQUIRE(m.degenerate);
    REQUIRE_NOTHROW(m.validate());

    auto two = make_stations({{"a", 0, 0, 1.0, Quality::ok}, {"b", 1, 1, 2.0, Quality::ok}});
    REQUIRE_THROWS_AS(fit_variogram(two), data_error);
}

TEST_CASE("variogram fit on white noise recovers the sample variance as sill") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(5.0, 2.0);
    std::uniform_real_distribution<double> up(0.0, 100.0);
    StationSet st;
    for (int i = 0; i < 300; ++i)
        st.stations.push_back({"s" + std::to_string(i), up(rng), up(rng),
                               std::max(noise(rng), 0.0), Quality::ok});
    double mean = 0.0;
    for (const auto& s : st.stations) mean += s.value;
    mean /= 300.0;
    double var = 0.0;
    for (const auto& s : st.stations) var += (s.value - mean) * (s.value - mean);
    var /= 299.0;

    auto m = fit_variogram(st);
    REQUIRE_FALSE(m.degenerate);
    REQUIRE(m.sill == Catch::Approx(var).epsilon(0.3));
}

TEST_CASE("single-station kriging is the constant field") {
    auto st = make_stations({{"a", 3.0, 3.0, 4.5, Quality::ok}});
    VariogramModel m;
    m.sill = 2.0;
    m.range = 5.0;
    auto f = kriging(st, GridSpec{0, 0, 1.0, 6, 6}, m);
    for (double v : f.values) REQUIRE(v == Catch::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("zero-nugget kriging is exact at station cells") {
    auto st = make_stations({{"a", 2.0, 3.0, 1.5, Quality::ok},
                             {"b", 7.0, 1.0, 6.0, Quality::ok},
                             {"c", 5.0, 8.0, 3.0, Quality::ok},
                             {"d", 1.0, 7.0, 0.5, Quality::ok}});
    VariogramModel m;
    m.nugget = 0.0;
    m.sill = 3.0;
    m.range = 8.0;
    GridSpec spec{0, 0, 1.0, 10, 10};
    auto f = kriging(st, spec, m);
    for (const auto& s : st.stations) {
        const auto r = static_cast<std::size_t>(spec.row_of(s.y));
        const auto c = static_cast<std::size_t>(spec.col_of(s.x));
        REQUIRE(f.at(r, c) == Catch::Approx(s.value).margin(1e-9));
    }
}

TEST_CASE("kriging matches an independently solved bordered system") {
    auto st = make_stations({{"a", 0.0, 0.0, 2.0, Quality::ok},
                             {"b", 6.0, 0.0, 5.0, Quality::ok},
                             {"c", 0.0, 6.0, 1.0, Quality::ok},
                             {"d", 6.0, 6.0, 7.0, Quality::ok}});
    VariogramModel m;
    m.nugget = 0.2;
    m.sill = 2.2;
    m.range = 10.0;
    GridSpec spec{2.0, 3.0, 1.0, 1, 1};
    auto f = kriging(st, spec, m);

    const std::size_t n = st.stations.size();
    std::vector<std::vector<double>> K(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> rhs(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& si = st.stations[i];
        for (std::size_t j = 0; j < n; ++j) {
            const auto& sj = st.stations[j];
            K[i][j] = m(std::hypot(si.x - sj.x, si.y - sj.y));
        }
        K[i][n] = K[n][i] = 1.0;
        rhs[i] = m(std::hypot(2.0 - si.x, 3.0 - si.y));
    }
    rhs[n] = 1.0;
    auto w = solve_dense(K, rhs);
    double want = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        want += w[i] * st.stations[i].value;
        wsum += w[i];
    }
    REQUIRE(wsum == Catch::Approx(1.0).epsilon(1e-10)); // unbiasedness constraint
    REQUIRE(f.at(0, 0) == Catch::Approx(want).epsilon(1e-10));
}

TEST_CASE("kriging reproduces a constant field exactly") {
    auto st = random_stations(8, 12.0, 55);
    for (auto& s : st.stations) s.value = 3.0;
    VariogramModel m;
    m.sill = 1.5;
    m.range = 6.0;
    auto f = kriging(st, GridSpec{0, 0, 1.0, 12, 12}, m);
    for (double v : f.values) REQUIRE(v == Catch::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("coincident stations are reported by id") {
    auto st = make_stations({{"alpha", 1.0, 1.0, 2.0, Quality::ok},
                             {"beta", 1.0, 1.0, 3.0, Quality::ok},
                             {"gamma", 4.0, 4.0, 1.0, Quality::ok}});
    VariogramModel m;
    m.nugget = 0.0;
    m.sill = 1.0;
    m.range = 3.0;
    try {
        kriging(st, GridSpec{0, 0, 1.0, 4, 4}, m);
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("alpha") != std::string::npos);
        REQUIRE(msg.find("beta") != std::string::npos);
    }
}

TEST_CASE("multiquadric interpolates station values exactly") {
    auto st = random_stations(9, 14.0, 66);
    for (auto& s : st.stations) {
        s.x = std::round(s.x);
        s.y = std::round(s.y);
    }
    std::sort(st.stations.begin(), st.stations.end(), [](const auto& a, const auto& b) {
        return std::make_pair(a.x, a.y) < std::make_pair(b.x, b.y);
    });
    st.stations.erase(std::unique(st.stations.begin(), st.stations.end(),
                                  [](const auto& a, const auto& b) {
                                      return a.x == b.x && a.y == b.y;
                                  }),
                      st.stations.end());
    GridSpec spec{0, 0, 1.0, 15, 15};
    MQConfig cfg;
    auto f = multiquadric(st, spec, cfg);
    for (const auto& s : st.stations) {
        const auto r = static_cast<std::size_t>(spec.row_of(s.y));
        const auto c = static_cast<std::size_t>(spec.col_of(s.x));
        REQUIRE(f.at(r, c) == Catch::Approx(s.value).margin(1e-8));
    }
}

TEST_CASE("multiquadric midpoint of two equal stations is symmetric") {
    auto st = make_stations({{"a", 0.0, 0.0, 4.0, Quality::ok}, {"b", 10.0, 0.0, 4.0, Quality::ok}});
    GridSpec spec{0, 0, 1.0, 1, 11};
    MQConfig cfg;
    cfg.c = 2.0;
    auto f = multiquadric(st, spec, cfg);
    for (std::size_t c = 0; c <= 5; ++c)
        REQUIRE(f.at(0, c) == Catch::Approx(f.at(0, 10 - c)).epsilon(1e-12));
}

TEST_CASE("multiquadric matches an independent dense solve") {
    auto st = make_stations({{"a", 1.0, 2.0, 3.0, Quality::ok},
                             {"b", 8.0, 1.0, 1.0, Quality::ok},
                             {"c", 4.0, 7.0, 6.0, Quality::ok},
                             {"d", 9.0, 9.0, 2.0, Quality::ok},
                             {"e", 2.0, 9.0, 4.0, Quality::ok}});
    MQConfig cfg;
    cfg.c = 1.5;
    GridSpec spec{0, 0, 1.0, 10, 10};
    auto f = multiquadric(st, spec, cfg);

    const std::size_t n = st.stations.size();
    std::vector<std::vector<double>> Phi(n, std::vector<double>(n, 0.0));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = st.stations[i].value;
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = st.stations[i].x - st.stations[j].x;
            const double dy = st.stations[i].y - st.stations[j].y;
            Phi[i][j] = std::sqrt(dx * dx + dy * dy + cfg.c * cfg.c);
        }
    }
    auto w = solve_dense(Phi, y);
    for (std::size_t r = 0; r < spec.rows; r += 2)
        for (std::size_t c = 0; c < spec.cols; c += 2) {
            double want = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = spec.x_of(c) - st.stations[i].x;
                const double dy = spec.y_of(r) - st.stations[i].y;
                want += w[i] * std::sqrt(dx * dx + dy * dy + cfg.c * cfg.c);
            }
            REQUIRE(f.at(r, c) == Catch::Approx(want).margin(1e-9));
        }
}

TEST_CASE("interpolators are invariant to station order, bitwise") {
    auto st = random_stations(10, 16.0, 77);
    auto shuffled = st;
    std::mt19937_64 rng(1);
    std::shuffle(shuffled.stations.begin(), shuffled.stations.end(), rng);
    GridSpec spec{0, 0, 1.0, 16, 16};

    BarnesConfig bc;
    bc.sigma = 2.0;
    REQUIRE(barnes(st, spec, bc).values == barnes(shuffled, spec, bc).values);

    VariogramModel m;
    m.sill = 2.0;
    m.range = 8.0;
    m.nugget = 0.1;
    REQUIRE(kriging(st, spec, m).values == kriging(shuffled, spec, m).values);

    MQConfig mc;
    mc.c = 2.0;
    REQUIRE(multiquadric(st, spec, mc).values == multiquadric(shuffled, spec, mc).values);
}
