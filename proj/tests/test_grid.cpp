#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rainsplat/grid.hpp"
#include "rainsplat/grid_io.hpp"

using namespace rainsplat;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / (std::string("rainsplat_test_") + name);
}

GridField random_field(GridSpec spec, std::uint64_t seed, double missing_prob = 0.0) {
    GridField f(spec);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    std::uniform_real_distribution<double> m(0.0, 1.0);
    for (double& v : f.values) v = (m(rng) < missing_prob) ? missing_value() : u(rng);
    return f;
}

} // namespace

TEST_CASE("GridSpec index/coordinate mapping round-trips") {
    GridSpec spec{-12.5, 40.0, 0.5, 17, 23};
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c) {
            REQUIRE(spec.row_of(spec.y_of(r)) == static_cast<long>(r));
            REQUIRE(spec.col_of(spec.x_of(c)) == static_cast<long>(c));
        }
}

TEST_CASE("GridSpec rejects invalid geometry") {
    GridSpec bad{0, 0, 0.0, 4, 4};
    REQUIRE_THROWS_AS(bad.validate(), data_error);
    bad = {0, 0, 1.0, 0, 4};
    REQUIRE_THROWS_AS(bad.validate(), data_error);
}

TEST_CASE("ascii grid parses the documented 2x2 layout") {
    auto path = temp_file("ascii_2x2.txt");
    {
        std::ofstream os(path);
        os << "rows 2\ncols 2\norigin_x 0\norigin_y 0\ncell_size 1\n1 2\n3 4\n";
    }
    auto f = read_grid(path.string(), GridFormat::ascii);
    REQUIRE(f.values == std::vector<double>{1, 2, 3, 4});
    REQUIRE(f.spec.cell_size == 1.0);
    fs::remove(path);
}

TEST_CASE("binary round-trip is bit-exact") {
    GridSpec spec{3.0, -7.0, 2.0, 9, 11};
    GridField f(spec);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    // values representable in f32 so the file round-trips exactly
    for (double& v : f.values) v = static_cast<double>(static_cast<float>(u(rng)));
    f.at(4, 5) = missing_value();

    auto path = temp_file("roundtrip.spf");
    write_grid(f, path.string(), GridFormat::binary);
    auto g = read_grid(path.string(), GridFormat::binary);
    REQUIRE(g.spec == f.spec);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (is_missing(f.values[i])) REQUIRE(is_missing(g.values[i]));
        else REQUIRE(g.values[i] == f.values[i]);
    }
    fs::remove(path);
}

TEST_CASE("zero field and missing sentinel survive both formats") {
    GridSpec spec{0, 0, 1.0, 3, 3};
    GridField f(spec, 0.0);
    f.at(1, 1) = missing_value();
    for (auto format : {GridFormat::binary, GridFormat::ascii}) {
        auto path = temp_file("zero.grid");
        write_grid(f, path.string(), format);
        auto g = read_grid(path.string(), format);
        REQUIRE(g.values[0] == 0.0);
        REQUIRE(is_missing(g.at(1, 1)));
        fs::remove(path);
    }
}

TEST_CASE("ascii round-trip error stays below 1e-5 of the max value") {
    GridSpec spec{0, 0, 1.0, 12, 12};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto f = random_field(spec, seed);
        auto path = temp_file("ascii_rt.txt");
        write_grid(f, path.string(), GridFormat::ascii);
        auto g = read_grid(path.string(), GridFormat::ascii);
        double max_abs = 0.0, max_diff = 0.0;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            max_abs = std::max(max_abs, std::abs(f.values[i]));
            max_diff = std::max(max_diff, std::abs(f.values[i] - g.values[i]));
        }
        REQUIRE(max_diff <= 1e-5 * max_abs);
        fs::remove(path);
    }
}

TEST_CASE("length mismatch is rejected") {
    auto path = temp_file("short.txt");
    {
        std::ofstream os(path);
        os << "rows 2\ncols 2\norigin_x 0\norigin_y 0\ncell_size 1\n1 2 3\n";
    }
    REQUIRE_THROWS_AS(read_grid(path.string(), GridFormat::ascii), io_error);
    fs::remove(path);
}

TEST_CASE("negative precipitation is rejected at the I/O boundary") {
    auto path = temp_file("neg.txt");
    {
        std::ofstream os(path);
        os << "rows 1\ncols 2\norigin_x 0\norigin_y 0\ncell_size 1\n1 -2\n";
    }
    REQUIRE_THROWS_AS(read_grid(path.string(), GridFormat::ascii), data_error);
    REQUIRE_NOTHROW(read_grid(path.string(), GridFormat::ascii, false));
    fs::remove(path);
}

TEST_CASE("block_mean resample: constants, checkerboard, random oracle") {
    GridSpec fine{0, 0, 1.0, 16, 16};

    SECTION("constant field stays constant") {
        GridField f(fine, 5.0);
        GridSpec coarse{1.5, 1.5, 4.0, 4, 4};
        auto g = resample(f, coarse, ResampleMode::block_mean);
        for (double v : g.values) REQUIRE(v == Catch::Approx(5.0));
    }

    SECTION("2x2 checkerboard block-means to the midpoint") {
        GridSpec two{0, 0, 1.0, 2, 2};
        GridField f(two);
        f.values = {0, 10, 10, 0};
        GridSpec one{0.5, 0.5, 2.0, 1, 1};
        auto g = resample(f, one, ResampleMode::block_mean);
        REQUIRE(g.values[0] == Catch::Approx(5.0));
    }

    SECTION("random 16x16 -> 4x4 matches a direct per-block average") {
        auto f = random_field(fine, 11, 0.05);
        GridSpec coarse{1.5, 1.5, 4.0, 4, 4};
        auto g = resample(f, coarse, ResampleMode::block_mean);
        for (std::size_t br = 0; br < 4; ++br)
            for (std::size_t bc = 0; bc < 4; ++bc) {
                double sum = 0.0;
                std::size_t n = 0;
                for (std::size_t r = br * 4; r < br * 4 + 4; ++r)
                    for (std::size_t c = bc * 4; c < bc * 4 + 4; ++c) {
                        if (is_missing(f.at(r, c))) continue;
                        sum += f.at(r, c);
                        ++n;
                    }
                if (n == 0) {
                    REQUIRE(is_missing(g.at(br, bc)));
                } else {
                    REQUIRE(g.at(br, bc) == Catch::Approx(sum / static_cast<double>(n)));
                }
            }
    }

    SECTION("domain mean is conserved over fully covered regions") {
        auto f = random_field(fine, 13);
        GridSpec coarse{1.5, 1.5, 4.0, 4, 4};
        auto g = resample(f, coarse, ResampleMode::block_mean);
        double mf = 0.0, mg = 0.0;
        for (double v : f.values) mf += v;
        for (double v : g.values) mg += v;
        REQUIRE(mg / 16.0 == Catch::Approx(mf / 256.0).epsilon(1e-12));
    }

    SECTION("empty overlap is an error") {
        GridField f(fine, 1.0);
        GridSpec far_away{100.0, 100.0, 4.0, 2, 2};
        REQUIRE_THROWS_AS(resample(f, far_away, ResampleMode::block_mean), data_error);
    }
}

TEST_CASE("refine keeps the outer extent") {
    GridSpec spec{0, 0, 2.0, 8, 8};
    auto fine = refine(spec, 0.5);
    REQUIRE(fine.rows == 16);
    REQUIRE(fine.cols == 16);
    // identical outer edges
    REQUIRE(fine.origin_x - 0.5 * fine.cell_size ==
            Catch::Approx(spec.origin_x - 0.5 * spec.cell_size));
    const double fine_hi = fine.x_of(fine.cols - 1) + 0.5 * fine.cell_size;
    const double base_hi = spec.x_of(spec.cols - 1) + 0.5 * spec.cell_size;
    REQUIRE(fine_hi == Catch::Approx(base_hi));
}
