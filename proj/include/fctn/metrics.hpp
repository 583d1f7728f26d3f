#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <numbers>
#include <vector>

#include "fctn/tensor.hpp"

namespace fctn {

/// Cap reported when a band is reconstructed exactly (MSE = 0).
inline constexpr double kPsnrCapDb = 300.0;

/// Per-band peak signal-to-noise ratio in dB. The peak is the per-band
/// maximum absolute value of the reference (conventions differ; this one is
/// fixed here and documented).
inline std::vector<double> psnr_per_band(const DenseTensor& ref, const DenseTensor& est) {
    require(ref.order() == 3 && ref.same_shape(est), "psnr: shape mismatch");
    const std::size_t pixels = ref.extent(0) * ref.extent(1);
    const std::size_t bands = ref.extent(2);
    std::vector<double> out(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        double peak = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) {
            const double r = ref[b * pixels + i];
            peak = std::max(peak, std::abs(r));
            const double d = r - est[b * pixels + i];
            sq += d * d;
        }
        const double mse = sq / static_cast<double>(pixels);
        out[b] = (mse == 0.0) ? kPsnrCapDb
                              : std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
    }
    return out;
}

inline double psnr(const DenseTensor& ref, const DenseTensor& est) {
    const auto per_band = psnr_per_band(ref, est);
    double sum = 0.0;
    for (double v : per_band) sum += v;
    return sum / static_cast<double>(per_band.size());
}

/// Mean spectral angle in degrees over pixels; pixels where either spectrum
/// has zero norm are skipped (and counted via the optional out-parameter).
/// Uses the half-angle form 2*atan2(|u-v|, |u+v|) on unit spectra, which stays
/// accurate near 0 and 180 degrees where acos loses precision.
inline double sam(const DenseTensor& ref, const DenseTensor& est,
                  std::size_t* skipped = nullptr) {
    require(ref.order() == 3 && ref.same_shape(est), "sam: shape mismatch");
    const std::size_t pixels = ref.extent(0) * ref.extent(1);
    const std::size_t bands = ref.extent(2);
    double sum = 0.0;
    std::size_t valid = 0, skip = 0;
    for (std::size_t i = 0; i < pixels; ++i) {
        double rr = 0.0, ee = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            const double r = ref[b * pixels + i];
            const double e = est[b * pixels + i];
            rr += r * r;
            ee += e * e;
        }
        if (rr == 0.0 || ee == 0.0) {
            ++skip;
            continue;
        }
        const double nr = std::sqrt(rr), ne = std::sqrt(ee);
        double diff2 = 0.0, sum2 = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            const double u = ref[b * pixels + i] / nr;
            const double v = est[b * pixels + i] / ne;
            diff2 += (u - v) * (u - v);
            sum2 += (u + v) * (u + v);
        }
        sum += 2.0 * std::atan2(std::sqrt(diff2), std::sqrt(sum2));
        ++valid;
    }
    if (skipped) *skipped = skip;
    if (valid == 0) return 0.0;
    return (sum / static_cast<double>(valid)) * 180.0 / std::numbers::pi;
}

/// Relative dimensionless global error:
/// 100/p * sqrt(mean over bands of MSE_b / mean_b^2). Bands whose reference
/// mean is exactly zero are skipped with a warning.
inline double ergas(const DenseTensor& ref, const DenseTensor& est, double p) {
    require(ref.order() == 3 && ref.same_shape(est), "ergas: shape mismatch");
    require(p > 0.0, "ergas: downsampling ratio must be positive");
    const std::size_t pixels = ref.extent(0) * ref.extent(1);
    const std::size_t bands = ref.extent(2);
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bands; ++b) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) mean += ref[b * pixels + i];
        mean /= static_cast<double>(pixels);
        if (mean == 0.0) {
            std::cerr << "ergas: skipping band " << b << " (zero reference mean)\n";
            continue;
        }
        for (std::size_t i = 0; i < pixels; ++i) {
            const double d = ref[b * pixels + i] - est[b * pixels + i];
            sq += d * d;
        }
        const double mse = sq / static_cast<double>(pixels);
        acc += mse / (mean * mean);
        ++used;
    }
    if (used == 0) return 0.0;
    return (100.0 / p) * std::sqrt(acc / static_cast<double>(used));
}

namespace detail {

/// Single-block universal image quality index with sample statistics.
/// Returns false for degenerate blocks (< 2 samples or zero denominator).
inline bool block_uiqi(const double* ref, const double* est, std::size_t rows,
                       std::size_t row0, std::size_t col0, std::size_t h,
                       std::size_t w, double& q) {
    const std::size_t count = h * w;
    if (count < 2) return false;
    double mx = 0.0, my = 0.0;
    for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = 0; r < h; ++r) {
            mx += ref[(row0 + r) + rows * (col0 + c)];
            my += est[(row0 + r) + rows * (col0 + c)];
        }
    mx /= static_cast<double>(count);
    my /= static_cast<double>(count);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = 0; r < h; ++r) {
            const double dx = ref[(row0 + r) + rows * (col0 + c)] - mx;
            const double dy = est[(row0 + r) + rows * (col0 + c)] - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
    const double denom = (sxx + syy) / static_cast<double>(count - 1) *
                         (mx * mx + my * my);
    if (denom == 0.0) return false;
    q = 4.0 * (sxy / static_cast<double>(count - 1)) * mx * my / denom;
    return true;
}

}  // namespace detail

/// Band-averaged universal image quality index over non-overlapping blocks
/// (stride = window; a partial block at the boundary is included when it has
/// at least two pixels).
inline double uiqi(const DenseTensor& ref, const DenseTensor& est,
                   std::size_t window = 32) {
    require(ref.order() == 3 && ref.same_shape(est), "uiqi: shape mismatch");
    const std::size_t rows = ref.extent(0), cols = ref.extent(1), bands = ref.extent(2);
    require(window >= 1 && window <= rows && window <= cols,
            "uiqi: window must fit inside the image");
    const std::size_t pixels = rows * cols;
    double total = 0.0;
    std::size_t blocks = 0;
    for (std::size_t b = 0; b < bands; ++b) {
        const double* r = ref.data() + b * pixels;
        const double* e = est.data() + b * pixels;
        for (std::size_t col0 = 0; col0 < cols; col0 += window)
            for (std::size_t row0 = 0; row0 < rows; row0 += window) {
                const std::size_t h = std::min(window, rows - row0);
                const std::size_t w = std::min(window, cols - col0);
                double q = 0.0;
                if (detail::block_uiqi(r, e, rows, row0, col0, h, w, q)) {
                    total += q;
                    ++blocks;
                }
            }
    }
    if (blocks == 0) return 0.0;
    return total / static_cast<double>(blocks);
}

/// One row of reconstruction-quality numbers.
struct MetricReport {
    double psnr_db = 0.0;
    std::vector<double> psnr_per_band;
    double sam_deg = 0.0;
    double ergas = 0.0;
    double uiqi = 0.0;
    double ratio = 1.0;  // downsampling ratio used by ERGAS
};

inline MetricReport evaluate_metrics(const DenseTensor& ref, const DenseTensor& est,
                                     double ratio, std::size_t uiqi_window = 32) {
    MetricReport rep;
    rep.psnr_per_band = psnr_per_band(ref, est);
    double sum = 0.0;
    for (double v : rep.psnr_per_band) sum += v;
    rep.psnr_db = sum / static_cast<double>(rep.psnr_per_band.size());
    rep.sam_deg = sam(ref, est);
    rep.ergas = ergas(ref, est, ratio);
    const std::size_t w = std::min({uiqi_window, ref.extent(0), ref.extent(1)});
    rep.uiqi = uiqi(ref, est, w);
    rep.ratio = ratio;
    return rep;
}

}  // namespace fctn
