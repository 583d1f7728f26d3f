#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "fctn/tensor.hpp"

namespace fctn {

struct CgResult {
    Matrix solution;
    bool converged = false;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Conjugate gradients for a symmetric positive (semi)definite linear operator
/// acting on matrices, under the trace inner product <A,B> = tr(A^T B).
/// Standard three-term recurrence; on residual stagnation (no new best residual
/// over 50 iterations) the true residual is recomputed and the search direction
/// reset. Returns the best iterate seen if max_iter is reached first.
///
/// Throws std::runtime_error when non-finite values appear, which signals a
/// divergent or indefinite operator.
template <typename Apply>
CgResult cg_solve(Apply&& apply, const Matrix& rhs, double tol, int max_iter,
                  const Matrix* warm_start = nullptr) {
    require(tol >= 0.0, "cg_solve: tolerance must be nonnegative");
    require(max_iter >= 0, "cg_solve: max_iter must be nonnegative");

    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0)
        return {Matrix::Zero(rhs.rows(), rhs.cols()), true, 0, 0.0};

    Matrix x = warm_start ? *warm_start : Matrix::Zero(rhs.rows(), rhs.cols());
    Matrix r = warm_start ? Matrix(rhs - apply(x)) : rhs;
    Matrix p = r;
    double rr = r.squaredNorm();
    if (!std::isfinite(rr)) throw std::runtime_error("cg_solve: non-finite residual");

    Matrix best = x;
    double best_norm = std::sqrt(rr);
    int best_iter = 0;
    constexpr int stagnation_window = 50;

    int it = 0;
    bool just_reset = false;
    while (it < max_iter && std::sqrt(rr) > tol * rhs_norm) {
        Matrix ap = apply(p);
        const double p_ap = p.cwiseProduct(ap).sum();
        if (!std::isfinite(p_ap))
            throw std::runtime_error("cg_solve: non-finite curvature (divergence or indefinite operator)");
        ++it;
        if (p_ap <= 0.0) {
            // Zero/negative curvature along p: for a PSD operator this is a
            // null-space direction met at roundoff level. Reset from the
            // current iterate; bail out if it happens twice in a row.
            if (just_reset) break;
            r = rhs - apply(x);
            rr = r.squaredNorm();
            p = r;
            just_reset = true;
            continue;
        }
        just_reset = false;

        const double alpha = rr / p_ap;
        x += alpha * p;
        r -= alpha * ap;
        const double rr_new = r.squaredNorm();
        if (!std::isfinite(rr_new))
            throw std::runtime_error("cg_solve: non-finite residual (divergence)");

        const double res_norm = std::sqrt(rr_new);
        if (res_norm < best_norm) {
            best_norm = res_norm;
            best = x;
            best_iter = it;
        }

        if (it - best_iter >= stagnation_window) {
            r = rhs - apply(x);
            rr = r.squaredNorm();
            p = r;
            best_iter = it;
            continue;
        }

        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }

    CgResult out;
    out.converged = std::sqrt(rr) <= tol * rhs_norm;
    out.iterations = it;
    if (!out.converged && best_norm < std::sqrt(rr)) {
        out.solution = std::move(best);
        out.relative_residual = best_norm / rhs_norm;
    } else {
        out.solution = std::move(x);
        out.relative_residual = std::sqrt(rr) / rhs_norm;
    }
    return out;
}

}  // namespace fctn
