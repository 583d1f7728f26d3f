#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fctn/fctn.hpp"
#include "fctn/tensorize.hpp"
#include "helpers.hpp"

using fctn::DenseTensor;
using fctn::Matrix;
using fctn::TensorizationPlan;

TEST_CASE("tensorize maps pixels to multiscale patch coordinates") {
    // 4x4 single band, both extents split 2x2. Every pixel (r,c) must land at
    // mode-0 index (r%2) + 2*(c%2) and mode-1 index (r/2) + 2*(c/2).
    TensorizationPlan plan{{2, 2}, {2, 2}, 0};
    DenseTensor x({4, 4, 1});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
    DenseTensor t = fctn::tensorize(x, plan);
    REQUIRE(t.shape() == std::vector<std::size_t>{4, 4, 1});
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            const std::size_t fine = (r % 2) + 2 * (c % 2);
            const std::size_t coarse = (r / 2) + 2 * (c / 2);
            CHECK(t.at({fine, coarse, 0}) == x.at({r, c, 0}));
        }
    // Pixel (row 2, col 1) in 1-based terms: fine index 2, coarse index 1.
    CHECK(t.at({1, 0, 0}) == x.at({1, 0, 0}));
}

TEST_CASE("single-scale tensorization is a plain reshape") {
    std::mt19937_64 rng(71);
    DenseTensor x = test::random_tensor({6, 4, 3}, rng);
    TensorizationPlan plan{{6}, {4}, 0};
    DenseTensor t = fctn::tensorize(x, plan);
    CHECK(test::exactly_equal(t, fctn::reshape(x, {24, 3})));
}

TEST_CASE("tensorize/detensorize round-trip") {
    std::mt19937_64 rng(73);
    const std::vector<TensorizationPlan> plans = {
        {{8}, {6}, 0},
        {{4, 2}, {3, 2}, 0},
        {{2, 3, 2}, {2, 2, 3}, 0},
    };
    for (const auto& plan : plans) {
        DenseTensor x = test::random_tensor({plan.rows(), plan.cols(), 3}, rng);
        DenseTensor rt = fctn::detensorize(fctn::tensorize(x, plan), plan);
        CHECK(test::exactly_equal(rt, x));
    }
    TensorizationPlan plan{{4, 2}, {3, 2}, 0};
    DenseTensor bad = test::random_tensor({7, 6, 3}, rng);
    CHECK_THROWS_AS(fctn::tensorize(bad, plan), std::invalid_argument);
}

TEST_CASE("spatial downsampling") {
    SECTION("constant image stays constant") {
        DenseTensor x({4, 4, 2});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.5;
        DenseTensor y = fctn::spatial_downsample(x, 2);
        REQUIRE(y.shape() == std::vector<std::size_t>{2, 2, 2});
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == Catch::Approx(2.5));
    }
    SECTION("factor one is the identity") {
        std::mt19937_64 rng(79);
        DenseTensor x = test::random_tensor({3, 5, 2}, rng);
        CHECK(test::exactly_equal(fctn::spatial_downsample(x, 1), x));
    }
    SECTION("hand-computed block means on the 4x4 ramp") {
        DenseTensor x({4, 4, 1});
        for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i + 1);
        DenseTensor y = fctn::spatial_downsample(x, 2);
        CHECK(y.at({0, 0, 0}) == Catch::Approx(3.5));
        CHECK(y.at({1, 0, 0}) == Catch::Approx(5.5));
        CHECK(y.at({0, 1, 0}) == Catch::Approx(11.5));
        CHECK(y.at({1, 1, 0}) == Catch::Approx(13.5));
    }
    SECTION("divisibility is required") {
        DenseTensor x({4, 4, 1});
        CHECK_THROWS_AS(fctn::spatial_downsample(x, 3), std::invalid_argument);
    }
}

TEST_CASE("spectral downsampling") {
    std::mt19937_64 rng(83);
    DenseTensor x = test::random_tensor({2, 2, 4}, rng);

    SECTION("identity SRF") {
        DenseTensor y = fctn::spectral_downsample(x, Matrix::Identity(4, 4));
        CHECK(test::rel_err(y, x) < 1e-15);
    }
    SECTION("uniform row gives the per-pixel band mean") {
        Matrix srf = Matrix::Constant(1, 4, 0.25);
        DenseTensor y = fctn::spectral_downsample(x, srf);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                double mean = 0.0;
                for (std::size_t b = 0; b < 4; ++b) mean += x.at({i, j, b});
                CHECK(y.at({i, j, 0}) == Catch::Approx(mean / 4.0));
            }
    }
    SECTION("random row-stochastic SRF against the per-pixel product") {
        Matrix srf = Matrix::Random(2, 4).cwiseAbs();
        for (int r = 0; r < 2; ++r) srf.row(r) /= srf.row(r).sum();
        DenseTensor y = fctn::spectral_downsample(x, srf);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                for (std::size_t s = 0; s < 2; ++s) {
                    double want = 0.0;
                    for (std::size_t b = 0; b < 4; ++b)
                        want += srf(static_cast<Eigen::Index>(s),
                                    static_cast<Eigen::Index>(b)) *
                                x.at({i, j, b});
                    CHECK(y.at({i, j, s}) == Catch::Approx(want).epsilon(1e-12));
                }
    }
    SECTION("dimension mismatch is rejected") {
        CHECK_THROWS_AS(fctn::spectral_downsample(x, Matrix::Identity(3, 3)),
                        std::invalid_argument);
    }
}

TEST_CASE("noise injection hits the requested SNR") {
    std::mt19937_64 rng(89);

    SECTION("very high SNR is a near no-op") {
        DenseTensor x = test::random_tensor({8, 8, 4}, rng, 0.5, 1.0);
        DenseTensor y = fctn::add_noise(x, 300.0, 1);
        CHECK(test::rel_err(y, x) < 1e-10);
    }
    SECTION("empirical SNR at 25 dB within 0.2 dB on a 256^3 tensor") {
        DenseTensor x({256, 256, 256});
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = unit(rng);
        DenseTensor y = fctn::add_noise(x, 25.0, 42);
        double noise_sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = y[i] - x[i];
            noise_sq += d * d;
        }
        const double snr = 10.0 * std::log10(x.squared_norm() / noise_sq);
        CHECK(snr == Catch::Approx(25.0).margin(0.2));
    }
    SECTION("same seed, same noise") {
        DenseTensor x = test::random_tensor({4, 4, 2}, rng);
        CHECK(test::exactly_equal(fctn::add_noise(x, 20.0, 7), fctn::add_noise(x, 20.0, 7)));
        CHECK_FALSE(
            test::exactly_equal(fctn::add_noise(x, 20.0, 7), fctn::add_noise(x, 20.0, 8)));
    }
}

TEST_CASE("first-factor downsampling commutes with image-space block means") {
    std::mt19937_64 rng(97);

    SECTION("p equal to the whole first scale averages the data mode away") {
        TensorizationPlan plan{{2, 3}, {2, 2}, 0};
        fctn::RankMatrix ranks(3, 2);
        fctn::FctnFactorSet f =
            fctn::random_init(ranks, plan.tensorized_shape(3), rng());
        DenseTensor down = fctn::downsample_first_factor(f.factors[0], 2, plan);
        CHECK(down.extent(0) == 1);
        // Entry = mean over the data mode.
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) {
                double mean = 0.0;
                for (std::size_t i = 0; i < 4; ++i) mean += f.factors[0].at({i, a, b});
                CHECK(down.at({0, a, b}) == Catch::Approx(mean / 4.0));
            }
    }
    SECTION("p = 1 is the identity") {
        TensorizationPlan plan{{4, 2}, {4, 2}, 0};
        std::vector<std::size_t> shape{16, 3, 2};
        DenseTensor u1 = test::random_tensor(shape, rng);
        CHECK(test::exactly_equal(fctn::downsample_first_factor(u1, 1, plan), u1));
    }
    SECTION("matches the image-space route on a model-consistent cube") {
        TensorizationPlan plan{{4, 2}, {4, 2}, 0};
        fctn::RankMatrix ranks(3, 2);
        fctn::FctnFactorSet f =
            fctn::random_init(ranks, plan.tensorized_shape(3), rng());
        DenseTensor x = fctn::detensorize(fctn::contract_full(f), plan);

        const std::size_t p = 2;
        DenseTensor route_a = fctn::tensorize(fctn::spatial_downsample(x, p),
                                              plan.coarsened(p));

        fctn::FctnFactorSet g = f;
        g.data_extents[0] = 4;  // (4/2)*(4/2)
        g.factors[0] = fctn::downsample_first_factor(f.factors[0], p, plan);
        DenseTensor route_b = fctn::contract_full(g);
        CHECK(test::rel_err(route_a, route_b) < 1e-12);
    }
    SECTION("divisibility is required") {
        TensorizationPlan plan{{4, 2}, {4, 2}, 0};
        DenseTensor u1({16, 3, 2});
        CHECK_THROWS_AS(fctn::downsample_first_factor(u1, 3, plan), std::invalid_argument);
    }
}

TEST_CASE("tensorized block averaging equals image-space downsampling") {
    std::mt19937_64 rng(101);
    const std::vector<std::pair<TensorizationPlan, std::size_t>> cases = {
        {{{4, 2}, {4, 3}, 0}, 2},
        {{{8}, {8}, 0}, 4},
        {{{6, 2}, {6, 2}, 0}, 3},
    };
    for (const auto& [plan, p] : cases) {
        DenseTensor x = test::random_tensor({plan.rows(), plan.cols(), 2}, rng);
        DenseTensor via_image =
            fctn::tensorize(fctn::spatial_downsample(x, p), plan.coarsened(p));
        DenseTensor via_mode = fctn::mode_product(
            fctn::tensorize(x, plan),
            fctn::first_scale_average(plan.row_factors[0], plan.col_factors[0], p), 0);
        CHECK(test::rel_err(via_image, via_mode) < 1e-12);
    }
}

TEST_CASE("spectral downsampling commutes with tensorization") {
    std::mt19937_64 rng(103);
    TensorizationPlan plan{{4, 2}, {2, 3}, 0};
    DenseTensor x = test::random_tensor({plan.rows(), plan.cols(), 5}, rng);
    Matrix srf = Matrix::Random(2, 5).cwiseAbs();
    for (int r = 0; r < 2; ++r) srf.row(r) /= srf.row(r).sum();

    DenseTensor a = fctn::tensorize(fctn::spectral_downsample(x, srf), plan);
    DenseTensor b = fctn::mode_product(fctn::tensorize(x, plan), srf, plan.scales());
    CHECK(test::rel_err(a, b) < 1e-13);
}

TEST_CASE("SRF CSV round-trip and validation") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "fctn_srf_test";
    fs::create_directories(dir);

    SECTION("round-trip") {
        Matrix srf(2, 3);
        srf << 0.5, 0.25, 0.25, 0.0, 0.5, 0.5;
        const auto path = (dir / "srf.csv").string();
        fctn::save_srf_csv(path, srf);
        Matrix back = fctn::load_srf_csv(path);
        CHECK((back - srf).norm() < 1e-15);
    }
    SECTION("rows are normalized on load") {
        const auto path = (dir / "unnormalized.csv").string();
        std::ofstream(path) << "1.0,1.0\n0.0,2.0\n";
        Matrix srf = fctn::load_srf_csv(path);
        CHECK(srf(0, 0) == Catch::Approx(0.5));
        CHECK(srf(1, 1) == Catch::Approx(1.0));
    }
    SECTION("negative entries are rejected") {
        const auto path = (dir / "negative.csv").string();
        std::ofstream(path) << "0.5,-0.5\n";
        CHECK_THROWS_AS(fctn::load_srf_csv(path), std::invalid_argument);
    }
}
