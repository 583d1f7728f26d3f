#pragma once

#include <cmath>
#include <cstddef>

#include "fctn/tensor.hpp"

namespace fctn {

/// Band-similarity graph of a hyperspectral cube: nonnegative symmetric
/// weights W with zero diagonal and Laplacian L = D - W (D = diag of row sums).
struct SpectralGraph {
    std::size_t bands = 0;
    double sigma = 0.0;
    std::size_t halfwidth = 0;
    Matrix weights;
    Matrix laplacian;
};

/// W(i,j) = exp(-||Y(:,:,i) - Y(:,:,j)||_F^2 / sigma^2) for 0 < |i-j| <= k,
/// zero otherwise. Symmetric by construction.
inline SpectralGraph build_weights(const DenseTensor& y, double sigma, std::size_t k) {
    require(y.order() == 3, "build_weights: input must be rows x cols x bands");
    require(sigma > 0.0, "build_weights: sigma must be positive");
    require(k >= 1, "build_weights: adjacency half-width must be >= 1");
    const std::size_t bands = y.extent(2);
    require(bands >= 2, "build_weights: need at least two bands");

    const std::size_t pixels = y.extent(0) * y.extent(1);
    const auto slice = [&](std::size_t b) {
        return Eigen::Map<const Eigen::VectorXd>(y.data() + b * pixels,
                                                 static_cast<Eigen::Index>(pixels));
    };

    SpectralGraph g;
    g.bands = bands;
    g.sigma = sigma;
    g.halfwidth = k;
    g.weights = Matrix::Zero(static_cast<Eigen::Index>(bands),
                             static_cast<Eigen::Index>(bands));
    for (std::size_t i = 0; i < bands; ++i)
        for (std::size_t j = i + 1; j < bands && j <= i + k; ++j) {
            const double dist2 = (slice(i) - slice(j)).squaredNorm();
            const double w = std::exp(-dist2 / (sigma * sigma));
            g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
            g.weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
        }

    g.laplacian = Matrix(g.weights.rowwise().sum().asDiagonal());
    g.laplacian -= g.weights;
    return g;
}

/// Laplacian quadratic form tr(u^T L u); equals half the weighted sum of
/// squared row differences, so it is always >= 0.
inline double wgr_value(const Matrix& u, const SpectralGraph& g) {
    require(static_cast<std::size_t>(u.rows()) == g.bands,
            "wgr_value: row count must equal the band count");
    return (u.transpose() * g.laplacian * u).trace();
}

}  // namespace fctn
