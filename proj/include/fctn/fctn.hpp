#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "fctn/tensor.hpp"

namespace fctn {

/// Symmetric matrix of bond ranks r(i,j) between factors i and j
/// (0-based factor indices; the diagonal is unused).
class RankMatrix {
public:
    RankMatrix() = default;

    RankMatrix(std::size_t factor_count, std::size_t uniform_rank)
        : n_(factor_count), r_(factor_count * factor_count, uniform_rank) {
        require(factor_count >= 2, "RankMatrix: need at least two factors");
        require(uniform_rank >= 1, "RankMatrix: ranks must be >= 1");
    }

    /// Builds from the upper triangle listed row-major:
    /// r(0,1), r(0,2), ..., r(0,n-1), r(1,2), ..., r(n-2,n-1).
    static RankMatrix from_upper_triangle(std::size_t factor_count,
                                          std::span<const std::size_t> values) {
        require(factor_count >= 2, "RankMatrix: need at least two factors");
        require(values.size() == factor_count * (factor_count - 1) / 2,
                "RankMatrix: wrong number of upper-triangle entries");
        RankMatrix rm(factor_count, 1);
        std::size_t v = 0;
        for (std::size_t i = 0; i < factor_count; ++i)
            for (std::size_t j = i + 1; j < factor_count; ++j) rm.set(i, j, values[v++]);
        return rm;
    }

    std::size_t factor_count() const noexcept { return n_; }

    std::size_t operator()(std::size_t i, std::size_t j) const {
        require(i < n_ && j < n_ && i != j, "RankMatrix: bad bond index");
        return r_[i * n_ + j];
    }

    void set(std::size_t i, std::size_t j, std::size_t rank) {
        require(i < n_ && j < n_ && i != j, "RankMatrix: bad bond index");
        require(rank >= 1, "RankMatrix: ranks must be >= 1");
        r_[i * n_ + j] = rank;
        r_[j * n_ + i] = rank;
    }

    /// Product of all bond ranks attached to factor t.
    std::size_t bond_product(std::size_t t) const {
        std::size_t prod = 1;
        for (std::size_t k = 0; k < n_; ++k)
            if (k != t) prod *= (*this)(t, k);
        return prod;
    }

    std::vector<std::size_t> upper_triangle() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) out.push_back((*this)(i, j));
        return out;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> r_;
};

/// Shape of factor t: extent data_extents[t] at mode t, rank r(t,k) at mode k.
inline std::vector<std::size_t> factor_shape(const RankMatrix& ranks,
                                             std::span<const std::size_t> data_extents,
                                             std::size_t t) {
    const std::size_t n = ranks.factor_count();
    require(data_extents.size() == n, "factor_shape: extent count mismatch");
    require(t < n, "factor_shape: factor index out of range");
    std::vector<std::size_t> shape(n);
    for (std::size_t k = 0; k < n; ++k) shape[k] = (k == t) ? data_extents[t] : ranks(t, k);
    return shape;
}

/// The factor tensors of a fully-connected tensor network: factor t is an
/// order-n tensor carrying the data mode at position t and one bond mode to
/// every other factor.
struct FctnFactorSet {
    RankMatrix ranks;
    std::vector<std::size_t> data_extents;
    std::vector<DenseTensor> factors;

    std::size_t factor_count() const noexcept { return factors.size(); }

    void validate() const {
        const std::size_t n = ranks.factor_count();
        require(n >= 2, "FctnFactorSet: need at least two factors");
        require(data_extents.size() == n && factors.size() == n,
                "FctnFactorSet: factor/extent count mismatch");
        for (std::size_t t = 0; t < n; ++t) {
            require(factors[t].order() == n, "FctnFactorSet: factor order mismatch");
            const auto expect = factor_shape(ranks, data_extents, t);
            require(factors[t].shape() == expect,
                    "FctnFactorSet: factor shape inconsistent with ranks/extents");
        }
    }
};

/// Factors filled i.i.d. uniform on [0,1); deterministic for a given seed.
inline FctnFactorSet random_init(const RankMatrix& ranks,
                                 std::span<const std::size_t> data_extents,
                                 std::uint64_t seed) {
    const std::size_t n = ranks.factor_count();
    require(data_extents.size() == n, "random_init: extent count mismatch");
    FctnFactorSet set;
    set.ranks = ranks;
    set.data_extents.assign(data_extents.begin(), data_extents.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < n; ++t) {
        DenseTensor u(factor_shape(ranks, data_extents, t));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = unit(rng);
        set.factors.push_back(std::move(u));
    }
    return set;
}

namespace detail {

/// Identifies a network mode: (t,t) is factor t's data mode, (a,b) with a<b
/// is the bond shared by factors a and b.
using ModeTag = std::pair<int, int>;

inline std::vector<ModeTag> factor_mode_tags(int t, int n) {
    std::vector<ModeTag> tags(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        tags[static_cast<std::size_t>(k)] =
            (k == t) ? ModeTag{t, t} : ModeTag{std::min(k, t), std::max(k, t)};
    return tags;
}

struct TaggedTensor {
    DenseTensor ten;
    std::vector<ModeTag> tags;
};

/// Contracts the listed factors pairwise in ascending index, merging every
/// bond shared with the accumulator as soon as the owning factor arrives.
/// Factor `skip` (if in range) is left out; its bonds stay free.
inline TaggedTensor contract_network(std::span<const DenseTensor* const> factor_ptrs,
                                     int skip) {
    const int n = static_cast<int>(factor_ptrs.size());
    require(n >= 2, "contract_network: need at least two factors");
    TaggedTensor acc;
    bool first = true;
    for (int t = 0; t < n; ++t) {
        if (t == skip) continue;
        const DenseTensor* ft = factor_ptrs[static_cast<std::size_t>(t)];
        require(ft != nullptr, "contract_network: missing factor");
        require(ft->order() == static_cast<std::size_t>(n),
                "contract_network: factor order mismatch");
        auto tags = factor_mode_tags(t, n);
        if (first) {
            acc = TaggedTensor{*ft, std::move(tags)};
            first = false;
            continue;
        }
        std::vector<ModePair> pairs;
        for (std::size_t i = 0; i < acc.tags.size(); ++i)
            for (std::size_t j = 0; j < tags.size(); ++j)
                if (acc.tags[i] == tags[j]) pairs.push_back({i, j});

        std::vector<ModeTag> merged;
        std::vector<bool> a_used(acc.tags.size(), false), b_used(tags.size(), false);
        for (const auto& pr : pairs) {
            a_used[pr.a] = true;
            b_used[pr.b] = true;
        }
        for (std::size_t i = 0; i < acc.tags.size(); ++i)
            if (!a_used[i]) merged.push_back(acc.tags[i]);
        for (std::size_t j = 0; j < tags.size(); ++j)
            if (!b_used[j]) merged.push_back(tags[j]);

        acc.ten = tensordot(acc.ten, *ft, pairs);
        acc.tags = std::move(merged);
    }
    return acc;
}

inline std::size_t tag_position(const std::vector<ModeTag>& tags, ModeTag want) {
    auto it = std::find(tags.begin(), tags.end(), want);
    require(it != tags.end(), "contract_network: internal tag bookkeeping error");
    return static_cast<std::size_t>(it - tags.begin());
}

}  // namespace detail

/// Full network contraction over an explicit factor list (factor k holds its
/// data mode at position k). Returns the tensor with data modes in order.
inline DenseTensor contract_factors(std::span<const DenseTensor* const> factor_ptrs) {
    auto tagged = detail::contract_network(factor_ptrs, -1);
    const std::size_t n = factor_ptrs.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k)
        perm[k] = detail::tag_position(tagged.tags, {static_cast<int>(k), static_cast<int>(k)});
    return permute(tagged.ten, perm);
}

/// Contraction of every factor except t. The result is returned as the
/// generalized unfolding used by the block updates: rows run over the data
/// modes of the remaining factors (ascending, column-major) and columns over
/// the bond modes that connected them to factor t (ascending by partner).
/// It satisfies  unfold(contract_factors(all), t) = U_t_(t) * result^T.
inline Matrix composite_except_factors(std::span<const DenseTensor* const> factor_ptrs,
                                       std::size_t t) {
    const std::size_t n = factor_ptrs.size();
    require(t < n, "composite_except: factor index out of range");
    auto tagged = detail::contract_network(factor_ptrs, static_cast<int>(t));

    std::vector<std::size_t> perm;
    perm.reserve(2 * (n - 1));
    std::size_t rows = 1, cols = 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == t) continue;
        const std::size_t pos =
            detail::tag_position(tagged.tags, {static_cast<int>(k), static_cast<int>(k)});
        perm.push_back(pos);
        rows *= tagged.ten.extent(pos);
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (k == t) continue;
        const detail::ModeTag bond{static_cast<int>(std::min(k, t)),
                                   static_cast<int>(std::max(k, t))};
        const std::size_t pos = detail::tag_position(tagged.tags, bond);
        perm.push_back(pos);
        cols *= tagged.ten.extent(pos);
    }
    DenseTensor ordered = permute(tagged.ten, perm);
    return Eigen::Map<const Matrix>(ordered.data(), static_cast<Eigen::Index>(rows),
                                    static_cast<Eigen::Index>(cols));
}

inline std::vector<const DenseTensor*> factor_pointers(const FctnFactorSet& f) {
    std::vector<const DenseTensor*> ptrs(f.factors.size());
    for (std::size_t k = 0; k < f.factors.size(); ++k) ptrs[k] = &f.factors[k];
    return ptrs;
}

/// Evaluates the full decomposition: shape = data_extents.
inline DenseTensor contract_full(const FctnFactorSet& f) {
    f.validate();
    return contract_factors(factor_pointers(f));
}

/// Mode-t unfolding of factor t; rows = data_extents[t].
inline Matrix factor_unfold(const FctnFactorSet& f, std::size_t t) {
    require(t < f.factors.size(), "factor_unfold: factor index out of range");
    return unfold(f.factors[t], t);
}

/// Composite of all factors except t. When spectral_map is given it is
/// multiplied into the data mode of the last factor before compositing
/// (that factor must participate, i.e. t < factor_count-1).
inline Matrix composite_except(const FctnFactorSet& f, std::size_t t,
                               const Matrix* spectral_map = nullptr) {
    f.validate();
    const std::size_t n = f.factor_count();
    require(t < n, "composite_except: factor index out of range");
    auto ptrs = factor_pointers(f);
    DenseTensor mapped;
    if (spectral_map != nullptr) {
        require(t + 1 < n, "composite_except: spectral map applies to an excluded factor");
        mapped = mode_product(f.factors[n - 1], *spectral_map, n - 1);
        ptrs[n - 1] = &mapped;
    }
    return composite_except_factors(ptrs, t);
}

}  // namespace fctn
