#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fctn/metrics.hpp"
#include "helpers.hpp"

using fctn::DenseTensor;

TEST_CASE("psnr") {
    SECTION("exact reconstruction hits the cap") {
        std::mt19937_64 rng(127);
        DenseTensor ref = test::random_tensor({4, 4, 2}, rng);
        CHECK(fctn::psnr(ref, ref) == Catch::Approx(fctn::kPsnrCapDb));
    }
    SECTION("constant band plus 0.1 offset gives exactly 20 dB") {
        DenseTensor ref({4, 4, 1});
        DenseTensor est({4, 4, 1});
        for (std::size_t i = 0; i < 16; ++i) {
            ref[i] = 1.0;
            est[i] = 1.1;
        }
        CHECK(fctn::psnr(ref, est) == Catch::Approx(20.0).epsilon(1e-12));
    }
    SECTION("more error means lower psnr") {
        std::mt19937_64 rng(131);
        DenseTensor ref = test::random_tensor({6, 6, 3}, rng, 0.0, 1.0);
        DenseTensor small = ref, big = ref;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            small[i] += 0.01;
            big[i] += 0.05;
        }
        CHECK(fctn::psnr(ref, big) < fctn::psnr(ref, small));
    }
    SECTION("shape mismatch is rejected") {
        DenseTensor a({2, 2, 1}), b({2, 2, 2});
        CHECK_THROWS_AS(fctn::psnr(a, b), std::invalid_argument);
    }
}

TEST_CASE("sam") {
    SECTION("positive rescaling gives zero angle") {
        std::mt19937_64 rng(137);
        DenseTensor ref = test::random_tensor({3, 3, 4}, rng, 0.1, 1.0);
        DenseTensor est = ref;
        for (std::size_t i = 0; i < est.size(); ++i) est[i] *= 3.7;
        CHECK(fctn::sam(ref, est) == Catch::Approx(0.0).margin(1e-10));
    }
    SECTION("orthogonal spectra give 90 degrees") {
        DenseTensor ref({1, 1, 2}), est({1, 1, 2});
        ref[0] = 1.0;
        ref[1] = 0.0;
        est[0] = 0.0;
        est[1] = 1.0;
        CHECK(fctn::sam(ref, est) == Catch::Approx(90.0));
    }
    SECTION("the (1,0) vs (1,1) pixel is 45 degrees") {
        DenseTensor ref({1, 1, 2}), est({1, 1, 2});
        ref[0] = 1.0;
        ref[1] = 0.0;
        est[0] = 1.0;
        est[1] = 1.0;
        CHECK(fctn::sam(ref, est) == Catch::Approx(45.0).epsilon(1e-12));
    }
    SECTION("zero-norm pixels are skipped and counted") {
        DenseTensor ref({2, 1, 2}), est({2, 1, 2});
        ref.at({0, 0, 0}) = 1.0;
        est.at({0, 0, 0}) = 1.0;
        // pixel (1,0) stays all-zero in ref
        est.at({1, 0, 0}) = 1.0;
        std::size_t skipped = 0;
        const double angle = fctn::sam(ref, est, &skipped);
        CHECK(skipped == 1);
        CHECK(angle == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("scale invariance over 1000 random spectra") {
        std::mt19937_64 rng(139);
        std::uniform_real_distribution<double> scale(0.1, 10.0);
        DenseTensor ref = test::random_tensor({25, 40, 6}, rng, 0.05, 1.0);
        DenseTensor est = ref;
        const std::size_t pixels = 25 * 40;
        for (std::size_t pix = 0; pix < pixels; ++pix) {
            const double c = scale(rng);
            for (std::size_t b = 0; b < 6; ++b) est[b * pixels + pix] = c * ref[b * pixels + pix];
        }
        CHECK(fctn::sam(ref, est) == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("ergas") {
    SECTION("exact reconstruction gives zero") {
        std::mt19937_64 rng(149);
        DenseTensor ref = test::random_tensor({4, 4, 3}, rng, 0.1, 1.0);
        CHECK(fctn::ergas(ref, ref, 8.0) == Catch::Approx(0.0));
    }
    SECTION("doubling the ratio halves the value") {
        std::mt19937_64 rng(151);
        DenseTensor ref = test::random_tensor({4, 4, 3}, rng, 0.1, 1.0);
        DenseTensor est = ref;
        for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.05;
        CHECK(fctn::ergas(ref, est, 8.0) == Catch::Approx(2.0 * fctn::ergas(ref, est, 16.0)));
    }
    SECTION("hand-computed single band value") {
        // mean 2, MSE 0.04, p = 8 -> 100/8 * sqrt(0.04/4) = 1.25
        DenseTensor ref({2, 2, 1}), est({2, 2, 1});
        for (std::size_t i = 0; i < 4; ++i) {
            ref[i] = 2.0;
            est[i] = 2.2;
        }
        CHECK(fctn::ergas(ref, est, 8.0) == Catch::Approx(1.25).epsilon(1e-12));
    }
    SECTION("zero-mean bands are skipped") {
        DenseTensor ref({2, 2, 2}), est({2, 2, 2});
        for (std::size_t i = 0; i < 4; ++i) {
            ref[i] = 0.0;   // band 0: zero mean, skipped
            ref[4 + i] = 2.0;
            est[i] = 0.5;
            est[4 + i] = 2.2;
        }
        CHECK(fctn::ergas(ref, est, 8.0) == Catch::Approx(1.25).epsilon(1e-12));
    }
}

TEST_CASE("uiqi") {
    std::mt19937_64 rng(157);

    SECTION("perfect match with nonzero variance gives one") {
        DenseTensor ref = test::random_tensor({8, 8, 2}, rng, 0.1, 1.0);
        CHECK(fctn::uiqi(ref, ref, 8) == Catch::Approx(1.0));
    }
    SECTION("reflection around the mean gives minus one") {
        DenseTensor ref = test::random_tensor({8, 8, 1}, rng, 0.2, 1.0);
        double mean = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) mean += ref[i];
        mean /= static_cast<double>(ref.size());
        DenseTensor est = ref;
        for (std::size_t i = 0; i < est.size(); ++i) est[i] = 2.0 * mean - ref[i];
        CHECK(fctn::uiqi(ref, est, 8) == Catch::Approx(-1.0).epsilon(1e-12));
    }
    SECTION("plain negation flips both factors and lands at plus one") {
        DenseTensor ref = test::random_tensor({8, 8, 1}, rng, 0.2, 1.0);
        DenseTensor est = ref;
        for (std::size_t i = 0; i < est.size(); ++i) est[i] = -ref[i];
        CHECK(fctn::uiqi(ref, est, 8) == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("window equal to the image is the single-block formula") {
        DenseTensor ref = test::random_tensor({6, 6, 1}, rng, 0.0, 1.0);
        DenseTensor est = test::random_tensor({6, 6, 1}, rng, 0.0, 1.0);
        const double got = fctn::uiqi(ref, est, 6);

        const std::size_t n = 36;
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += ref[i];
            my += est[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxx += (ref[i] - mx) * (ref[i] - mx);
            syy += (est[i] - my) * (est[i] - my);
            sxy += (ref[i] - mx) * (est[i] - my);
        }
        sxx /= (n - 1);
        syy /= (n - 1);
        sxy /= (n - 1);
        const double want = 4 * sxy * mx * my / ((sxx + syy) * (mx * mx + my * my));
        CHECK(got == Catch::Approx(want).epsilon(1e-12));
    }
    SECTION("window larger than the image is rejected") {
        DenseTensor ref({4, 4, 1});
        CHECK_THROWS_AS(fctn::uiqi(ref, ref, 8), std::invalid_argument);
    }
}

TEST_CASE("metrics are equivariant under a shared spatial permutation") {
    std::mt19937_64 rng(163);
    DenseTensor ref = test::random_tensor({6, 5, 3}, rng, 0.1, 1.0);
    DenseTensor est = test::random_tensor({6, 5, 3}, rng, 0.1, 1.0);

    // Same row/column shuffle applied to both cubes.
    std::vector<std::size_t> rows(6), cols(5);
    for (std::size_t i = 0; i < 6; ++i) rows[i] = i;
    for (std::size_t j = 0; j < 5; ++j) cols[j] = j;
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(cols.begin(), cols.end(), rng);
    DenseTensor ref_p({6, 5, 3}), est_p({6, 5, 3});
    for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t i = 0; i < 6; ++i) {
                ref_p.at({i, j, b}) = ref.at({rows[i], cols[j], b});
                est_p.at({i, j, b}) = est.at({rows[i], cols[j], b});
            }

    CHECK(fctn::psnr(ref_p, est_p) == Catch::Approx(fctn::psnr(ref, est)).epsilon(1e-12));
    CHECK(fctn::sam(ref_p, est_p) == Catch::Approx(fctn::sam(ref, est)).epsilon(1e-12));
    CHECK(fctn::ergas(ref_p, est_p, 4.0) ==
          Catch::Approx(fctn::ergas(ref, est, 4.0)).epsilon(1e-12));
}

TEST_CASE("metric report aggregates every number") {
    std::mt19937_64 rng(167);
    DenseTensor ref = test::random_tensor({8, 8, 3}, rng, 0.1, 1.0);
    DenseTensor est = ref;
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.01;
    const auto rep = fctn::evaluate_metrics(ref, est, 4.0);
    CHECK(rep.psnr_per_band.size() == 3);
    CHECK(rep.psnr_db > 0.0);
    CHECK(rep.sam_deg >= 0.0);
    CHECK(rep.sam_deg <= 180.0);
    CHECK(rep.ergas >= 0.0);
    CHECK(rep.uiqi <= 1.0);
    CHECK(rep.ratio == 4.0);
}
