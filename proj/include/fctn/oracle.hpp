#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fctn/fctn.hpp"

namespace fctn {

/// Reference evaluator for the full network contraction: literally enumerates
/// every data multi-index and every bond multi-index and accumulates the
/// product of factor entries. Intentionally independent of the contraction
/// engine (it does its own index arithmetic on the raw buffers) so it can
/// serve as the oracle in self-checks. Gated to tiny instances — the cost is
/// exponential in the factor count.
inline DenseTensor contract_reference(const FctnFactorSet& f,
                                      std::size_t max_terms = 1u << 24) {
    f.validate();
    const std::size_t n = f.factor_count();

    // Bond list (a,b), a<b, with extents; bond index layout per factor.
    std::vector<std::pair<std::size_t, std::size_t>> bonds;
    std::vector<std::size_t> bond_extent;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            bonds.emplace_back(a, b);
            bond_extent.push_back(f.ranks(a, b));
        }

    std::size_t data_total = 1, bond_total = 1;
    for (std::size_t e : f.data_extents) data_total *= e;
    for (std::size_t e : bond_extent) bond_total *= e;
    if (data_total * bond_total > max_terms)
        throw std::invalid_argument("contract_reference: instance too large for the brute-force oracle");

    // Per-factor column-major strides, computed by hand.
    std::vector<std::vector<std::size_t>> strides(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto& shape = f.factors[t].shape();
        strides[t].resize(n);
        std::size_t acc = 1;
        for (std::size_t k = 0; k < n; ++k) {
            strides[t][k] = acc;
            acc *= shape[k];
        }
    }

    DenseTensor out(f.data_extents);
    std::vector<std::size_t> data_idx(n, 0);
    std::vector<std::size_t> bond_idx(bonds.size(), 0);
    for (std::size_t lin = 0; lin < data_total; ++lin) {
        // Decode the output multi-index (first mode fastest).
        std::size_t rem = lin;
        for (std::size_t k = 0; k < n; ++k) {
            data_idx[k] = rem % f.data_extents[k];
            rem /= f.data_extents[k];
        }

        double sum = 0.0;
        std::fill(bond_idx.begin(), bond_idx.end(), 0);
        for (std::size_t term = 0; term < bond_total; ++term) {
            double prod = 1.0;
            for (std::size_t t = 0; t < n; ++t) {
                std::size_t off = data_idx[t] * strides[t][t];
                for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
                    const auto [a, b] = bonds[bi];
                    if (a == t) off += bond_idx[bi] * strides[t][b];
                    else if (b == t) off += bond_idx[bi] * strides[t][a];
                }
                prod *= f.factors[t].data()[off];
            }
            sum += prod;
            for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
                if (++bond_idx[bi] < bond_extent[bi]) break;
                bond_idx[bi] = 0;
            }
        }
        out[lin] = sum;
    }
    return out;
}

}  // namespace fctn
