#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fctn/fctn.hpp"
#include "fctn/tensor.hpp"

namespace test {

inline fctn::DenseTensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                                       double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    fctn::DenseTensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

inline double rel_err(const fctn::DenseTensor& got, const fctn::DenseTensor& want) {
    REQUIRE(got.same_shape(want));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - want[i];
        num += d * d;
        den += want[i] * want[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline bool exactly_equal(const fctn::DenseTensor& a, const fctn::DenseTensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

/// Random tiny decomposition instance for oracle-driven tests.
inline fctn::FctnFactorSet random_instance(std::size_t factor_count, std::mt19937_64& rng,
                                           std::size_t max_extent = 4,
                                           std::size_t max_rank = 3) {
    std::uniform_int_distribution<std::size_t> extent_dist(2, max_extent);
    std::uniform_int_distribution<std::size_t> rank_dist(1, max_rank);
    fctn::RankMatrix ranks(factor_count, 1);
    for (std::size_t i = 0; i < factor_count; ++i)
        for (std::size_t j = i + 1; j < factor_count; ++j) ranks.set(i, j, rank_dist(rng));
    std::vector<std::size_t> extents(factor_count);
    for (auto& e : extents) e = extent_dist(rng);
    return fctn::random_init(ranks, extents, rng());
}

}  // namespace test
