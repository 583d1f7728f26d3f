#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fctn/fctn.hpp"
#include "fctn/tensorize.hpp"

namespace fctn {

/// Cube drawn exactly from the decomposition model, rescaled to peak
/// magnitude 1. Rescaling keeps the cube exactly representable at the given
/// ranks, which is what the recovery benchmarks need. The factors are drawn
/// uniform on [-0.5, 0.5): centered factors are far better conditioned than
/// all-positive ones and keep alternating least squares out of its swamps.
inline DenseTensor fctn_model_cube(const TensorizationPlan& plan, const RankMatrix& ranks,
                                   std::size_t bands, std::uint64_t seed) {
    plan.validate();
    const auto extents = plan.tensorized_shape(bands);
    require(ranks.factor_count() == extents.size(),
            "fctn_model_cube: rank matrix size must be scales+1");
    FctnFactorSet f = random_init(ranks, extents, seed);
    for (auto& u : f.factors)
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= 0.5;
    DenseTensor t = contract_full(f);
    double peak = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) peak = std::max(peak, std::abs(t[i]));
    if (peak > 0.0)
        for (std::size_t i = 0; i < t.size(); ++i) t[i] /= peak;
    return detensorize(t, plan);
}

/// Scene with smooth spectra: a few materials, each a mixture of Gaussian
/// bumps over the band index, mixed by smooth spatial abundance maps.
/// Affinely normalized to [0,1]. Adjacent bands are strongly correlated,
/// which is the regime the band-graph regularizer targets.
inline DenseTensor smooth_spectra_cube(std::size_t rows, std::size_t cols,
                                       std::size_t bands, std::size_t materials,
                                       std::uint64_t seed) {
    require(rows >= 1 && cols >= 1 && bands >= 1, "smooth_spectra_cube: empty shape");
    require(materials >= 1, "smooth_spectra_cube: need at least one material");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Spectral signatures: three bumps per material.
    std::vector<std::vector<double>> spectra(materials, std::vector<double>(bands, 0.0));
    for (auto& sig : spectra)
        for (int bump = 0; bump < 3; ++bump) {
            const double amp = 0.3 + 0.7 * unit(rng);
            const double center = unit(rng) * static_cast<double>(bands - 1);
            const double width =
                (0.1 + 0.25 * unit(rng)) * std::max<double>(1.0, static_cast<double>(bands));
            for (std::size_t b = 0; b < bands; ++b) {
                const double z = (static_cast<double>(b) - center) / width;
                sig[b] += amp * std::exp(-0.5 * z * z);
            }
        }

    // Abundance maps: two spatial Gaussian blobs per material.
    std::vector<std::vector<double>> maps(materials, std::vector<double>(rows * cols, 0.0));
    for (auto& amap : maps)
        for (int blob = 0; blob < 2; ++blob) {
            const double ci = unit(rng) * static_cast<double>(rows - 1);
            const double cj = unit(rng) * static_cast<double>(cols - 1);
            const double radius =
                (0.15 + 0.35 * unit(rng)) * static_cast<double>(std::max(rows, cols));
            for (std::size_t j = 0; j < cols; ++j)
                for (std::size_t i = 0; i < rows; ++i) {
                    const double di = (static_cast<double>(i) - ci) / radius;
                    const double dj = (static_cast<double>(j) - cj) / radius;
                    amap[i + rows * j] += std::exp(-0.5 * (di * di + dj * dj));
                }
        }

    DenseTensor x({rows, cols, bands});
    for (std::size_t b = 0; b < bands; ++b)
        for (std::size_t ij = 0; ij < rows * cols; ++ij) {
            double v = 0.0;
            for (std::size_t m = 0; m < materials; ++m) v += maps[m][ij] * spectra[m][b];
            x[ij + rows * cols * b] = v;
        }

    double lo = x[0], hi = x[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    const double span = hi - lo;
    if (span > 0.0)
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - lo) / span;
    return x;
}

/// Row-stochastic SRF that averages contiguous groups of input bands, the
/// groups as equal as possible.
inline Matrix band_average_srf(std::size_t out_bands, std::size_t in_bands) {
    require(out_bands >= 1 && out_bands <= in_bands,
            "band_average_srf: need 1 <= out_bands <= in_bands");
    Matrix srf = Matrix::Zero(static_cast<Eigen::Index>(out_bands),
                              static_cast<Eigen::Index>(in_bands));
    const std::size_t base = in_bands / out_bands, extra = in_bands % out_bands;
    std::size_t start = 0;
    for (std::size_t r = 0; r < out_bands; ++r) {
        const std::size_t width = base + (r < extra ? 1 : 0);
        for (std::size_t c = start; c < start + width; ++c)
            srf(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                1.0 / static_cast<double>(width);
        start += width;
    }
    return srf;
}

/// Nearest-neighbor spatial upsampling (pixel replication); the baseline the
/// fusion result is compared against.
inline DenseTensor nearest_neighbor_upsample(const DenseTensor& x, std::size_t p) {
    require(x.order() == 3, "nearest_neighbor_upsample: input must be a cube");
    require(p >= 1, "nearest_neighbor_upsample: factor must be >= 1");
    const std::size_t rows = x.extent(0), cols = x.extent(1), bands = x.extent(2);
    DenseTensor out({rows * p, cols * p, bands});
    for (std::size_t b = 0; b < bands; ++b)
        for (std::size_t j = 0; j < cols * p; ++j)
            for (std::size_t i = 0; i < rows * p; ++i)
                out[i + rows * p * (j + cols * p * b)] =
                    x[(i / p) + rows * ((j / p) + cols * b)];
    return out;
}

}  // namespace fctn
