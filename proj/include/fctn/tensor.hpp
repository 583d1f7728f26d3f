#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fctn {

/// Dense column-major matrix; the value type for all unfoldings.
using Matrix = Eigen::MatrixXd;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

namespace detail {

inline std::size_t shape_product(std::span<const std::size_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>{});
}

/// stride[0] = 1, stride[k] = stride[k-1] * shape[k-1] (first index fastest).
inline std::vector<std::size_t> column_major_strides(std::span<const std::size_t> shape) {
    std::vector<std::size_t> strides(shape.size());
    std::size_t acc = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        strides[k] = acc;
        acc *= shape[k];
    }
    return strides;
}

}  // namespace detail

/// Dense N-dimensional real tensor. The linearization is column-major
/// everywhere: the first index varies fastest, exactly like a Fortran array.
/// Values are immutable in spirit — all operations below return new tensors.
class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(detail::shape_product(shape_), 0.0);
    }

    DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        require(data_.size() == detail::shape_product(shape_),
                "DenseTensor: data length does not match shape product");
    }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t extent(std::size_t mode) const {
        require(mode < shape_.size(), "DenseTensor: mode out of range");
        return shape_[mode];
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    /// Multi-index element access (mainly for tests and reference code).
    double at(std::span<const std::size_t> idx) const {
        return data_[linear_index(idx)];
    }
    double& at(std::span<const std::size_t> idx) {
        return data_[linear_index(idx)];
    }
    double at(std::initializer_list<std::size_t> idx) const {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }
    double& at(std::initializer_list<std::size_t> idx) {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }

    double frobenius_norm() const {
        return Eigen::Map<const Eigen::VectorXd>(data_.data(),
                                                 static_cast<Eigen::Index>(data_.size()))
            .norm();
    }

    double squared_norm() const {
        return Eigen::Map<const Eigen::VectorXd>(data_.data(),
                                                 static_cast<Eigen::Index>(data_.size()))
            .squaredNorm();
    }

    bool same_shape(const DenseTensor& other) const { return shape_ == other.shape_; }

private:
    void validate_shape() const {
        require(!shape_.empty(), "DenseTensor: shape must have at least one mode");
        for (std::size_t e : shape_)
            require(e >= 1, "DenseTensor: every extent must be >= 1");
    }

    std::size_t linear_index(std::span<const std::size_t> idx) const {
        require(idx.size() == shape_.size(), "DenseTensor: index order mismatch");
        std::size_t lin = 0, stride = 1;
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            require(idx[k] < shape_[k], "DenseTensor: index out of range");
            lin += idx[k] * stride;
            stride *= shape_[k];
        }
        return lin;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Reinterprets the buffer under a new shape with the same element count.
/// Pure metadata change under the column-major convention.
inline DenseTensor reshape(const DenseTensor& t, std::vector<std::size_t> new_shape) {
    require(!new_shape.empty(), "reshape: shape must have at least one mode");
    require(detail::shape_product(new_shape) == t.size(),
            "reshape: extent product mismatch");
    return DenseTensor(std::move(new_shape),
                       std::vector<double>(t.data(), t.data() + t.size()));
}

/// Mode permutation, numpy-transpose style: output mode k is input mode perm[k].
inline DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
    const std::size_t n = t.order();
    require(perm.size() == n, "permute: permutation length mismatch");
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        require(p < n, "permute: mode index out of range");
        require(!seen[p], "permute: repeated mode index");
        seen[p] = true;
    }

    std::vector<std::size_t> out_shape(n);
    for (std::size_t k = 0; k < n; ++k) out_shape[k] = t.extent(perm[k]);
    DenseTensor out(out_shape);

    const auto in_strides = detail::column_major_strides(t.shape());
    std::vector<std::size_t> step(n);
    for (std::size_t k = 0; k < n; ++k) step[k] = in_strides[perm[k]];

    // Odometer over the output multi-index; src tracks the mapped input offset.
    std::vector<std::size_t> idx(n, 0);
    std::size_t src = 0;
    const std::size_t total = out.size();
    for (std::size_t dst = 0; dst < total; ++dst) {
        out[dst] = t[src];
        for (std::size_t k = 0; k < n; ++k) {
            src += step[k];
            if (++idx[k] < out_shape[k]) break;
            src -= step[k] * out_shape[k];
            idx[k] = 0;
        }
    }
    return out;
}

inline DenseTensor permute(const DenseTensor& t, std::initializer_list<std::size_t> perm) {
    return permute(t, std::span<const std::size_t>(perm.begin(), perm.size()));
}

inline std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
    return inv;
}

/// Mode-n matricization: rows = extent of `mode`, columns = the remaining
/// modes in ascending order, column-major linearized. Returns a contiguous copy.
inline Matrix unfold(const DenseTensor& t, std::size_t mode) {
    require(mode < t.order(), "unfold: mode out of range");
    const auto rows = static_cast<Eigen::Index>(t.extent(mode));
    const auto cols = static_cast<Eigen::Index>(t.size() / t.extent(mode));
    if (mode == 0)
        return Eigen::Map<const Matrix>(t.data(), rows, cols);

    std::vector<std::size_t> perm(t.order());
    perm[0] = mode;
    for (std::size_t k = 0, j = 1; k < t.order(); ++k)
        if (k != mode) perm[j++] = k;
    DenseTensor moved = permute(t, perm);
    return Eigen::Map<const Matrix>(moved.data(), rows, cols);
}

/// Exact inverse of unfold.
inline DenseTensor fold(const Matrix& m, std::size_t mode,
                        std::vector<std::size_t> shape) {
    require(mode < shape.size(), "fold: mode out of range");
    const std::size_t total = detail::shape_product(shape);
    require(static_cast<std::size_t>(m.rows()) == shape[mode] &&
                static_cast<std::size_t>(m.rows() * m.cols()) == total,
            "fold: matrix dimensions inconsistent with shape and mode");

    std::vector<double> buf(m.data(), m.data() + total);
    if (mode == 0) return DenseTensor(std::move(shape), std::move(buf));

    std::vector<std::size_t> moved_shape(shape.size());
    moved_shape[0] = shape[mode];
    for (std::size_t k = 0, j = 1; k < shape.size(); ++k)
        if (k != mode) moved_shape[j++] = shape[k];
    DenseTensor moved(std::move(moved_shape), std::move(buf));

    std::vector<std::size_t> inv(shape.size());
    inv[mode] = 0;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k < mode) inv[k] = k + 1;
        else if (k > mode) inv[k] = k;
    }
    return permute(moved, inv);
}

/// Multiplies a matrix into one tensor mode: result_(mode) = m * t_(mode).
inline DenseTensor mode_product(const DenseTensor& t, const Matrix& m,
                                std::size_t mode) {
    require(mode < t.order(), "mode_product: mode out of range");
    require(static_cast<std::size_t>(m.cols()) == t.extent(mode),
            "mode_product: inner-dimension mismatch");
    Matrix res = m * unfold(t, mode);
    std::vector<std::size_t> shape = t.shape();
    shape[mode] = static_cast<std::size_t>(m.rows());
    return fold(res, mode, std::move(shape));
}

/// A pair of modes (one in each operand) to be contracted against each other.
struct ModePair {
    std::size_t a;
    std::size_t b;
};

/// Contracts tensors a and b over the listed mode pairs. Free modes of a keep
/// their relative (ascending) order and come first, followed by the free modes
/// of b in ascending order.
inline DenseTensor tensordot(const DenseTensor& a, const DenseTensor& b,
                             std::span<const ModePair> pairs) {
    std::vector<bool> a_used(a.order(), false), b_used(b.order(), false);
    for (const auto& pr : pairs) {
        require(pr.a < a.order() && pr.b < b.order(),
                "tensordot: contraction mode out of range");
        require(!a_used[pr.a] && !b_used[pr.b], "tensordot: repeated contraction mode");
        require(a.extent(pr.a) == b.extent(pr.b),
                "tensordot: contracted extents do not match");
        a_used[pr.a] = true;
        b_used[pr.b] = true;
    }

    std::vector<std::size_t> a_perm, b_perm;
    std::vector<std::size_t> out_shape;
    std::size_t free_a = 1, free_b = 1, shared = 1;
    for (std::size_t k = 0; k < a.order(); ++k)
        if (!a_used[k]) {
            a_perm.push_back(k);
            out_shape.push_back(a.extent(k));
            free_a *= a.extent(k);
        }
    for (const auto& pr : pairs) {
        a_perm.push_back(pr.a);
        shared *= a.extent(pr.a);
    }
    for (const auto& pr : pairs) b_perm.push_back(pr.b);
    for (std::size_t k = 0; k < b.order(); ++k)
        if (!b_used[k]) {
            b_perm.push_back(k);
            out_shape.push_back(b.extent(k));
            free_b *= b.extent(k);
        }
    if (out_shape.empty()) out_shape.push_back(1);  // full contraction -> scalar

    DenseTensor a_moved = permute(a, a_perm);
    DenseTensor b_moved = permute(b, b_perm);
    Eigen::Map<const Matrix> lhs(a_moved.data(), static_cast<Eigen::Index>(free_a),
                                 static_cast<Eigen::Index>(shared));
    Eigen::Map<const Matrix> rhs(b_moved.data(), static_cast<Eigen::Index>(shared),
                                 static_cast<Eigen::Index>(free_b));

    DenseTensor out(std::move(out_shape));
    Eigen::Map<Matrix>(out.data(), static_cast<Eigen::Index>(free_a),
                       static_cast<Eigen::Index>(free_b)) = lhs * rhs;
    return out;
}

}  // namespace fctn
