#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fctn/cg.hpp"
#include "fctn/fctn.hpp"
#include "fctn/graph.hpp"
#include "fctn/tensorize.hpp"

namespace fctn {

/// Everything the fusion solver needs as input. The objective is
///
///   w_hsi/2 ||T{hsi} - F(Q, U_2..U_{d+1})||^2
/// + w_msi/2 ||T{msi} - F(U_1..U_d, U_{d+1} x R)||^2
/// + beta/2  tr(U^T L U)            (U = spectral unfolding of the last factor)
/// + mu/2    (sum_{t<=d} ||U_t||^2 + ||Q||^2)
///
/// with (w_hsi, w_msi) = (1, lambda). The published update equations weight
/// the HSI term instead; paper_term_weights swaps to (lambda, 1) to mirror
/// them. Every block update is derived from this one objective either way,
/// which is what makes the descent monotone.
struct FusionConfig {
    double lambda = 0.1;
    double mu = 120.0;
    double beta = 0.1;
    double sigma = 10.0;
    int max_iter = 480;
    RankMatrix ranks;
    TensorizationPlan plan;
    std::uint64_t seed = 0;
    double cg_tol = 1e-8;
    int cg_max_iter = 500;
    int objective_log_every = 1;  // stride for the objective CSV emitted by the CLI
    std::size_t graph_halfwidth = 1;
    bool paper_term_weights = false;
    bool early_stop = true;
    double early_stop_tol = 1e-8;
    int early_stop_window = 10;

    double hsi_weight() const { return paper_term_weights ? lambda : 1.0; }
    double msi_weight() const { return paper_term_weights ? 1.0 : lambda; }

    void validate() const {
        require(lambda >= 0.0 && mu >= 0.0 && beta >= 0.0,
                "FusionConfig: lambda, mu, beta must be nonnegative");
        require(max_iter >= 1, "FusionConfig: max_iter must be >= 1");
        require(sigma > 0.0, "FusionConfig: sigma must be positive");
        require(cg_tol >= 0.0 && cg_max_iter >= 1, "FusionConfig: bad CG settings");
        require(objective_log_every >= 1, "FusionConfig: objective_log_every must be >= 1");
        require(graph_halfwidth >= 1, "FusionConfig: graph half-width must be >= 1");
        require(early_stop_window >= 1, "FusionConfig: early-stop window must be >= 1");
        plan.validate();
        require(ranks.factor_count() == plan.scales() + 1,
                "FusionConfig: rank matrix size must be scales+1");
    }
};

struct FusionState {
    FctnFactorSet factors;  // factor scales()+1-1 is the spectral factor
    DenseTensor q;          // low-resolution stand-in for factor 0 in the HSI model
    SpectralGraph graph;
    std::vector<double> objective_history;
    int iterations_run = 0;
    int cg_total_iterations = 0;
    int cg_failures = 0;         // spectral solves that hit max_iter unconverged
    int spectral_ridge_events = 0;  // retries with the tiny stabilizing ridge
};

/// Factor list of the HSI model: Q replaces factor 0.
inline std::vector<const DenseTensor*> hsi_model_pointers(const FusionState& s) {
    auto ptrs = factor_pointers(s.factors);
    ptrs[0] = &s.q;
    return ptrs;
}

/// The spectral factor with the SRF multiplied into its data mode.
inline DenseTensor msi_mapped_factor(const FusionState& s, const Matrix& srf) {
    const std::size_t last = s.factors.factor_count() - 1;
    return mode_product(s.factors.factors[last], srf, last);
}

inline double objective(const FusionState& s, const DenseTensor& hsi_t,
                        const DenseTensor& msi_t, const Matrix& srf,
                        const FusionConfig& cfg) {
    const std::size_t last = s.factors.factor_count() - 1;

    DenseTensor hsi_fit = contract_factors(hsi_model_pointers(s));
    require(hsi_fit.same_shape(hsi_t), "objective: HSI model shape mismatch");
    double hsi_res = 0.0;
    for (std::size_t i = 0; i < hsi_t.size(); ++i) {
        const double d = hsi_t[i] - hsi_fit[i];
        hsi_res += d * d;
    }

    DenseTensor mapped = msi_mapped_factor(s, srf);
    auto zp = factor_pointers(s.factors);
    zp[last] = &mapped;
    DenseTensor msi_fit = contract_factors(zp);
    require(msi_fit.same_shape(msi_t), "objective: MSI model shape mismatch");
    double msi_res = 0.0;
    for (std::size_t i = 0; i < msi_t.size(); ++i) {
        const double d = msi_t[i] - msi_fit[i];
        msi_res += d * d;
    }

    double graph_term = 0.0;
    if (cfg.beta != 0.0)
        graph_term = wgr_value(unfold(s.factors.factors[last], last), s.graph);

    double ridge = s.q.squared_norm();
    for (std::size_t t = 0; t < last; ++t) ridge += s.factors.factors[t].squared_norm();

    return 0.5 * (cfg.hsi_weight() * hsi_res + cfg.msi_weight() * msi_res +
                  cfg.beta * graph_term + cfg.mu * ridge);
}

namespace detail {

/// U = rhs * gram^{-1} with gram symmetric positive definite.
inline Matrix solve_normal_equations(const Matrix& gram, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "block update: singular normal matrix (set mu > 0 to regularize)");
    return llt.solve(rhs.transpose()).transpose();
}

}  // namespace detail

/// Exact minimizer of the Q block: ridge least squares against the HSI data.
inline void update_q(FusionState& s, const DenseTensor& hsi_t, const FusionConfig& cfg) {
    const Matrix h = composite_except_factors(hsi_model_pointers(s), 0);
    const double wy = cfg.hsi_weight();
    Matrix gram = wy * (h.transpose() * h);
    gram.diagonal().array() += cfg.mu;
    const Matrix rhs = wy * (unfold(hsi_t, 0) * h);
    s.q = fold(detail::solve_normal_equations(gram, rhs), 0, s.q.shape());
}

/// Exact minimizer of the first-factor block: ridge least squares against the
/// MSI data (factor 0 does not appear in the HSI model).
inline void update_u1(FusionState& s, const DenseTensor& msi_t, const Matrix& srf,
                      const FusionConfig& cfg) {
    const std::size_t last = s.factors.factor_count() - 1;
    DenseTensor mapped = msi_mapped_factor(s, srf);
    auto zp = factor_pointers(s.factors);
    zp[last] = &mapped;
    const Matrix o = composite_except_factors(zp, 0);
    const double wz = cfg.msi_weight();
    Matrix gram = wz * (o.transpose() * o);
    gram.diagonal().array() += cfg.mu;
    const Matrix rhs = wz * (unfold(msi_t, 0) * o);
    s.factors.factors[0] =
        fold(detail::solve_normal_equations(gram, rhs), 0, s.factors.factors[0].shape());
}

/// Exact minimizer of a middle factor block (1 <= t <= scales-1): both data
/// terms contribute.
inline void update_ut(FusionState& s, const DenseTensor& hsi_t, const DenseTensor& msi_t,
                      const Matrix& srf, std::size_t t, const FusionConfig& cfg) {
    const std::size_t last = s.factors.factor_count() - 1;
    require(t >= 1 && t < last, "update_ut: t must index a middle factor");

    DenseTensor mapped = msi_mapped_factor(s, srf);
    auto zp = factor_pointers(s.factors);
    zp[last] = &mapped;
    const Matrix o = composite_except_factors(zp, t);
    const Matrix h = composite_except_factors(hsi_model_pointers(s), t);

    const double wy = cfg.hsi_weight(), wz = cfg.msi_weight();
    Matrix gram = wz * (o.transpose() * o) + wy * (h.transpose() * h);
    gram.diagonal().array() += cfg.mu;
    const Matrix rhs = wz * (unfold(msi_t, t) * o) + wy * (unfold(hsi_t, t) * h);
    s.factors.factors[t] =
        fold(detail::solve_normal_equations(gram, rhs), t, s.factors.factors[t].shape());
}

/// Spectral factor block. The normal equations couple the factor from the
/// left (SRF gram, graph Laplacian) and the right (composite grams), so the
/// solve runs conjugate gradients on the matrix operator
///   U -> w_msi R^T R U (O^T O) + w_hsi U (H^T H) + beta L U,
/// warm-started at the current factor (CG never increases the block objective
/// from a warm start). No mu ridge on this factor; if the operator is
/// numerically singular a tiny trace-scaled ridge is added and counted.
inline void update_spectral(FusionState& s, const DenseTensor& hsi_t,
                            const DenseTensor& msi_t, const Matrix& srf,
                            const FusionConfig& cfg) {
    const std::size_t last = s.factors.factor_count() - 1;
    const Matrix o = composite_except_factors(factor_pointers(s.factors), last);
    const Matrix h = composite_except_factors(hsi_model_pointers(s), last);

    const double wy = cfg.hsi_weight(), wz = cfg.msi_weight();
    const Matrix o_gram = o.transpose() * o;
    const Matrix h_gram = h.transpose() * h;
    const Matrix srf_gram = srf.transpose() * srf;
    const Matrix rhs = wz * (srf.transpose() * (unfold(msi_t, last) * o)) +
                       wy * (unfold(hsi_t, last) * h);

    const bool use_graph = cfg.beta != 0.0;
    const auto apply = [&](const Matrix& u) {
        Matrix out = wz * (srf_gram * u * o_gram) + wy * (u * h_gram);
        if (use_graph) out += cfg.beta * (s.graph.laplacian * u);
        return out;
    };

    const Matrix warm = unfold(s.factors.factors[last], last);
    CgResult res;
    try {
        res = cg_solve(apply, rhs, cfg.cg_tol, cfg.cg_max_iter, &warm);
    } catch (const std::runtime_error&) {
        const double bands = static_cast<double>(rhs.rows());
        const double width = static_cast<double>(rhs.cols());
        const double op_trace = wz * srf_gram.trace() * o_gram.trace() +
                                wy * bands * h_gram.trace() +
                                (use_graph ? cfg.beta * s.graph.laplacian.trace() * width : 0.0);
        const double eps = 1e-10 * op_trace / (bands * width);
        ++s.spectral_ridge_events;
        res = cg_solve([&](const Matrix& u) { return Matrix(apply(u) + eps * u); }, rhs,
                       cfg.cg_tol, cfg.cg_max_iter, &warm);
    }
    s.cg_total_iterations += res.iterations;
    if (!res.converged) ++s.cg_failures;  // best iterate is kept regardless
    s.factors.factors[last] = fold(res.solution, last, s.factors.factors[last].shape());
}

/// Seeds the factor set, the Q surrogate and the band graph. The downsampling
/// ratio is inferred from the HSI spatial extents against the plan.
inline FusionState initialize_state(const DenseTensor& hsi, const FusionConfig& cfg) {
    cfg.validate();
    require(hsi.order() == 3, "initialize_state: HSI must be rows x cols x bands");
    const std::size_t M = cfg.plan.rows(), N = cfg.plan.cols();
    require(M % hsi.extent(0) == 0, "initialize_state: HSI rows do not divide the plan");
    const std::size_t p = M / hsi.extent(0);
    require(N == hsi.extent(1) * p, "initialize_state: inconsistent downsampling ratio");
    const TensorizationPlan lr_plan = cfg.plan.coarsened(p);

    const std::size_t bands = hsi.extent(2);
    const auto extents = cfg.plan.tensorized_shape(bands);

    FusionState s;
    s.factors = random_init(cfg.ranks, extents, cfg.seed);
    std::vector<std::size_t> q_shape = factor_shape(cfg.ranks, extents, 0);
    q_shape[0] = lr_plan.row_factors[0] * lr_plan.col_factors[0];
    DenseTensor q(q_shape);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = unit(rng);
    s.q = std::move(q);

    if (bands >= 2)
        s.graph = build_weights(hsi, cfg.sigma, cfg.graph_halfwidth);
    else
        require(cfg.beta == 0.0, "initialize_state: graph regularization needs >= 2 bands");
    return s;
}

struct FusionResult {
    DenseTensor estimate;  // rows x cols x bands
    FusionState state;
};

/// Full alternating solve: tensorize both observations, seed the state, sweep
/// the blocks in order (Q, U_1, middle factors, spectral factor) max_iter
/// times, then evaluate the decomposition and unfold it back to an image cube.
inline FusionResult fuse(const DenseTensor& hsi, const DenseTensor& msi,
                         const Matrix& srf, const FusionConfig& cfg) {
    cfg.validate();
    require(hsi.order() == 3 && msi.order() == 3, "fuse: inputs must be image cubes");
    require(msi.extent(0) == cfg.plan.rows() && msi.extent(1) == cfg.plan.cols(),
            "fuse: MSI spatial extents do not match the plan");
    require(static_cast<std::size_t>(srf.cols()) == hsi.extent(2),
            "fuse: SRF columns must match the HSI band count");
    require(static_cast<std::size_t>(srf.rows()) == msi.extent(2),
            "fuse: SRF rows must match the MSI band count");

    FusionState state = initialize_state(hsi, cfg);
    const std::size_t p = cfg.plan.rows() / hsi.extent(0);
    const DenseTensor hsi_t = tensorize(hsi, cfg.plan.coarsened(p));
    TensorizationPlan msi_plan = cfg.plan;
    msi_plan.bands = 0;  // band count differs from the target cube
    const DenseTensor msi_t = tensorize(msi, msi_plan);

    const std::size_t n = state.factors.factor_count();
    state.objective_history.push_back(objective(state, hsi_t, msi_t, srf, cfg));
    for (int it = 1; it <= cfg.max_iter; ++it) {
        try {
            update_q(state, hsi_t, cfg);
            update_u1(state, msi_t, srf, cfg);
            for (std::size_t t = 1; t + 1 < n; ++t)
                update_ut(state, hsi_t, msi_t, srf, t, cfg);
            update_spectral(state, hsi_t, msi_t, srf, cfg);
        } catch (const std::exception& e) {
            throw std::runtime_error("fuse: iteration " + std::to_string(it) + ": " +
                                     e.what());
        }
        state.objective_history.push_back(objective(state, hsi_t, msi_t, srf, cfg));
        state.iterations_run = it;

        if (cfg.early_stop &&
            state.objective_history.size() > static_cast<std::size_t>(cfg.early_stop_window)) {
            const double before =
                state.objective_history[state.objective_history.size() - 1 -
                                        static_cast<std::size_t>(cfg.early_stop_window)];
            const double now = state.objective_history.back();
            if (before - now <= cfg.early_stop_tol * std::max(std::abs(before), 1e-300))
                break;
        }
    }

    DenseTensor estimate = detensorize(contract_full(state.factors), cfg.plan);
    return {std::move(estimate), std::move(state)};
}

}  // namespace fctn
