#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fctn/tensor.hpp"

namespace fctn {

/// Multiscale factorization of the spatial extents: rows = prod(row_factors),
/// cols = prod(col_factors). Scale t of the tensorized cube merges the t-th
/// row and column factors into one mode of extent row_factors[t]*col_factors[t];
/// the band mode stays last.
struct TensorizationPlan {
    std::vector<std::size_t> row_factors;
    std::vector<std::size_t> col_factors;
    std::size_t bands = 0;  // 0 = take the band count from the input cube

    std::size_t scales() const noexcept { return row_factors.size(); }

    std::size_t rows() const { return detail::shape_product(row_factors); }
    std::size_t cols() const { return detail::shape_product(col_factors); }

    void validate() const {
        require(!row_factors.empty(), "TensorizationPlan: need at least one scale");
        require(row_factors.size() == col_factors.size(),
                "TensorizationPlan: row/col factor count mismatch");
        for (std::size_t f : row_factors)
            require(f >= 1, "TensorizationPlan: factors must be >= 1");
        for (std::size_t f : col_factors)
            require(f >= 1, "TensorizationPlan: factors must be >= 1");
    }

    /// Shape of the tensorized cube for a given band count.
    std::vector<std::size_t> tensorized_shape(std::size_t band_count) const {
        std::vector<std::size_t> shape(scales() + 1);
        for (std::size_t t = 0; t < scales(); ++t) shape[t] = row_factors[t] * col_factors[t];
        shape[scales()] = band_count;
        return shape;
    }

    /// Plan of the spatially downsampled cube: the reduction is absorbed
    /// entirely by the first scale.
    TensorizationPlan coarsened(std::size_t p) const {
        validate();
        require(p >= 1 && row_factors[0] % p == 0 && col_factors[0] % p == 0,
                "TensorizationPlan: downsampling factor must divide the first scale");
        TensorizationPlan out = *this;
        out.row_factors[0] /= p;
        out.col_factors[0] /= p;
        return out;
    }
};

/// Folds an image cube (rows x cols x bands) into the multiscale tensor
/// (R1C1 x R2C2 x ... x bands): split both spatial extents by the plan,
/// interleave row/col factors scale by scale, merge each pair. Bijective.
inline DenseTensor tensorize(const DenseTensor& x, const TensorizationPlan& plan) {
    plan.validate();
    require(x.order() == 3, "tensorize: input must be rows x cols x bands");
    require(x.extent(0) == plan.rows() && x.extent(1) == plan.cols(),
            "tensorize: spatial extents do not match the plan");
    if (plan.bands != 0)
        require(x.extent(2) == plan.bands, "tensorize: band count does not match the plan");

    const std::size_t d = plan.scales();
    std::vector<std::size_t> split;
    split.insert(split.end(), plan.row_factors.begin(), plan.row_factors.end());
    split.insert(split.end(), plan.col_factors.begin(), plan.col_factors.end());
    split.push_back(x.extent(2));

    std::vector<std::size_t> interleave(2 * d + 1);
    for (std::size_t t = 0; t < d; ++t) {
        interleave[2 * t] = t;          // row factor of scale t
        interleave[2 * t + 1] = d + t;  // col factor of scale t
    }
    interleave[2 * d] = 2 * d;  // bands

    DenseTensor t2 = permute(reshape(x, split), interleave);
    return reshape(t2, plan.tensorized_shape(x.extent(2)));
}

/// Exact inverse of tensorize.
inline DenseTensor detensorize(const DenseTensor& t, const TensorizationPlan& plan) {
    plan.validate();
    const std::size_t d = plan.scales();
    require(t.order() == d + 1, "detensorize: order does not match the plan");
    const std::size_t bands = t.extent(d);
    require(t.shape() == plan.tensorized_shape(bands),
            "detensorize: shape does not match the plan");

    std::vector<std::size_t> interleaved_shape(2 * d + 1);
    for (std::size_t s = 0; s < d; ++s) {
        interleaved_shape[2 * s] = plan.row_factors[s];
        interleaved_shape[2 * s + 1] = plan.col_factors[s];
    }
    interleaved_shape[2 * d] = bands;

    std::vector<std::size_t> inv(2 * d + 1);
    for (std::size_t s = 0; s < d; ++s) {
        inv[s] = 2 * s;
        inv[d + s] = 2 * s + 1;
    }
    inv[2 * d] = 2 * d;

    DenseTensor t2 = permute(reshape(t, interleaved_shape), inv);
    return reshape(t2, {plan.rows(), plan.cols(), bands});
}

/// Disjoint p x p block mean per band.
inline DenseTensor spatial_downsample(const DenseTensor& x, std::size_t p) {
    require(x.order() == 3, "spatial_downsample: input must be rows x cols x bands");
    require(p >= 1, "spatial_downsample: factor must be >= 1");
    const std::size_t rows = x.extent(0), cols = x.extent(1), bands = x.extent(2);
    require(rows % p == 0 && cols % p == 0,
            "spatial_downsample: factor must divide both spatial extents");
    if (p == 1) return x;

    const std::size_t out_rows = rows / p, out_cols = cols / p;
    DenseTensor out({out_rows, out_cols, bands});
    const double inv = 1.0 / static_cast<double>(p * p);
    for (std::size_t b = 0; b < bands; ++b)
        for (std::size_t j = 0; j < out_cols; ++j)
            for (std::size_t i = 0; i < out_rows; ++i) {
                double sum = 0.0;
                for (std::size_t c = 0; c < p; ++c)
                    for (std::size_t r = 0; r < p; ++r)
                        sum += x[(i * p + r) + rows * ((j * p + c) + cols * b)];
                out[i + out_rows * (j + out_cols * b)] = sum * inv;
            }
    return out;
}

/// Applies the spectral response matrix (msi_bands x hsi_bands) to the band mode.
inline DenseTensor spectral_downsample(const DenseTensor& x, const Matrix& srf) {
    require(x.order() == 3, "spectral_downsample: input must be rows x cols x bands");
    require(static_cast<std::size_t>(srf.cols()) == x.extent(2),
            "spectral_downsample: SRF column count does not match band count");
    return mode_product(x, srf, 2);
}

/// Adds i.i.d. zero-mean Gaussian noise with variance chosen so the requested
/// signal-to-noise ratio holds in expectation: var = ||x||_F^2 / (count * 10^(snr/10)).
inline DenseTensor add_noise(const DenseTensor& x, double snr_db, std::uint64_t seed) {
    require(std::isfinite(snr_db), "add_noise: snr must be finite");
    const double var = x.squared_norm() /
                       (static_cast<double>(x.size()) * std::pow(10.0, snr_db / 10.0));
    DenseTensor out = x;
    if (var <= 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(var));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gauss(rng);
    return out;
}

/// Block-mean matrix acting on the first-scale merged mode: maps extent
/// R1*C1 down to (R1/p)*(C1/p) by averaging the p x p sub-blocks the
/// tensorization index map induces there.
inline Matrix first_scale_average(std::size_t r1, std::size_t c1, std::size_t p) {
    require(p >= 1 && r1 % p == 0 && c1 % p == 0,
            "first_scale_average: factor must divide the first-scale extents");
    const std::size_t lr = r1 / p, lc = c1 / p;
    Matrix avg = Matrix::Zero(static_cast<Eigen::Index>(lr * lc),
                              static_cast<Eigen::Index>(r1 * c1));
    const double w = 1.0 / static_cast<double>(p * p);
    for (std::size_t v = 0; v < lc; ++v)
        for (std::size_t u = 0; u < lr; ++u)
            for (std::size_t c = 0; c < p; ++c)
                for (std::size_t r = 0; r < p; ++r)
                    avg(static_cast<Eigen::Index>(u + lr * v),
                        static_cast<Eigen::Index>((r + p * u) + r1 * (c + p * v))) = w;
    return avg;
}

/// Spatially downsamples the first factor of a decomposition by averaging its
/// data mode (the first-scale merged mode) over p x p sub-blocks.
inline DenseTensor downsample_first_factor(const DenseTensor& u1, std::size_t p,
                                           const TensorizationPlan& plan) {
    plan.validate();
    const std::size_t r1 = plan.row_factors[0], c1 = plan.col_factors[0];
    require(u1.extent(0) == r1 * c1,
            "downsample_first_factor: data mode does not match the plan's first scale");
    if (p == 1) return u1;
    return mode_product(u1, first_scale_average(r1, c1, p), 0);
}

/// Sensor degradation bundle: spectral response (rows sum to 1), spatial
/// block-average factor, optional noise levels.
struct DegradationModel {
    Matrix srf;
    std::size_t factor = 1;
    std::optional<double> snr_hsi_db;
    std::optional<double> snr_msi_db;
};

/// Reads an SRF as plain-decimal CSV, msi_bands rows x hsi_bands columns.
/// Rows are normalized to sum 1; deviations beyond 1e-6 get a warning.
inline Matrix load_srf_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_srf_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n,") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
            row.push_back(std::stod(cell));
        }
        if (!rows.empty())
            require(row.size() == rows.front().size(), "load_srf_csv: ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    require(!rows.empty() && !rows.front().empty(), "load_srf_csv: empty file " + path);

    Matrix srf(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < srf.rows(); ++i)
        for (Eigen::Index j = 0; j < srf.cols(); ++j) {
            const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            require(v >= 0.0, "load_srf_csv: negative SRF entry");
            srf(i, j) = v;
        }
    for (Eigen::Index i = 0; i < srf.rows(); ++i) {
        const double sum = srf.row(i).sum();
        require(sum > 0.0, "load_srf_csv: SRF row sums to zero");
        if (std::abs(sum - 1.0) > 1e-6)
            std::cerr << "load_srf_csv: normalizing row " << i << " (sum was " << sum << ")\n";
        srf.row(i) /= sum;
    }
    return srf;
}

inline void save_srf_csv(const std::string& path, const Matrix& srf) {
    std::ofstream out(path);
    require(out.good(), "save_srf_csv: cannot open " + path);
    out.precision(17);
    for (Eigen::Index i = 0; i < srf.rows(); ++i) {
        for (Eigen::Index j = 0; j < srf.cols(); ++j)
            out << srf(i, j) << (j + 1 < srf.cols() ? "," : "");
        out << "\n";
    }
}

}  // namespace fctn
