#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fctn/cg.hpp"
#include "fctn/metrics.hpp"
#include "fctn/npy.hpp"
#include "fctn/oracle.hpp"
#include "fctn/solver.hpp"
#include "fctn/synthetic.hpp"

namespace fctn {

inline constexpr const char* kVersion = "0.1.0";

// Salts for deriving the noise streams from the experiment seed.
inline constexpr std::uint64_t kHsiNoiseSalt = 0xa5a5a5a5'12345678ull;
inline constexpr std::uint64_t kMsiNoiseSalt = 0x5a5a5a5a'87654321ull;

/// Resolved description of one experiment run.
struct ExperimentSpec {
    std::string ref_path;
    std::string hsi_path;
    std::string msi_path;
    std::string srf_path;
    std::string out_dir = ".";
    std::string run_id;  // empty = "run-<seed>"

    // Synthetic scene generation (simulate mode): "", "fctn" or "smooth".
    std::string synth;
    std::size_t synth_rows = 32, synth_cols = 32, synth_bands = 8;
    std::size_t synth_msi_bands = 3, synth_materials = 4;

    // Degradation.
    std::size_t p = 8;
    std::optional<double> snr_hsi_db;
    std::optional<double> snr_msi_db;

    FusionConfig config;

    std::string resolved_run_id() const {
        return run_id.empty() ? "run-" + std::to_string(config.seed) : run_id;
    }
};

inline std::string format_plan(const TensorizationPlan& plan) {
    std::string s;
    for (std::size_t t = 0; t < plan.scales(); ++t) {
        if (t) s += ",";
        s += std::to_string(plan.row_factors[t]) + "x" + std::to_string(plan.col_factors[t]);
    }
    return s;
}

/// Parses "8x8,5x5,2x2" into a plan.
inline TensorizationPlan parse_plan(const std::string& text) {
    TensorizationPlan plan;
    std::stringstream ss(text);
    std::string scale;
    while (std::getline(ss, scale, ',')) {
        const auto x = scale.find('x');
        require(x != std::string::npos && x > 0 && x + 1 < scale.size(),
                "parse_plan: expected entries like 8x8, got '" + scale + "'");
        plan.row_factors.push_back(std::stoul(scale.substr(0, x)));
        plan.col_factors.push_back(std::stoul(scale.substr(x + 1)));
    }
    plan.validate();
    return plan;
}

/// Parses the upper-triangle rank list r(1,2), r(1,3), ..., r(d,d+1); a single
/// value is broadcast to every bond.
inline RankMatrix parse_ranks(const std::string& text, std::size_t factor_count) {
    std::vector<std::size_t> vals;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        vals.push_back(std::stoul(cell));
    }
    require(!vals.empty(), "parse_ranks: empty rank list");
    if (vals.size() == 1) return RankMatrix(factor_count, vals[0]);
    return RankMatrix::from_upper_triangle(factor_count,
                                           std::span<const std::size_t>(vals));
}

namespace detail {

inline std::string g17(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

inline void append_metrics_csv(const std::string& path, const std::string& run_id,
                               const MetricReport* rep, int iterations, double seconds) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    require(out.good(), "metrics csv: cannot open " + path);
    if (fresh) out << "run_id,psnr_db,sam_deg,ergas,uiqi,iterations,seconds\n";
    out << run_id << ",";
    if (rep)
        out << g17(rep->psnr_db) << "," << g17(rep->sam_deg) << "," << g17(rep->ergas)
            << "," << g17(rep->uiqi) << ",";
    else
        out << ",,,,";
    out << iterations << "," << g17(seconds) << "\n";
}

inline void write_objective_csv(const std::string& path,
                                const std::vector<double>& history, int every) {
    std::ofstream out(path);
    require(out.good(), "objective csv: cannot open " + path);
    out << "iteration,objective\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        if (i % static_cast<std::size_t>(every) == 0 || i + 1 == history.size())
            out << i << "," << g17(history[i]) << "\n";
}

inline nlohmann::json config_json(const ExperimentSpec& spec) {
    const FusionConfig& c = spec.config;
    nlohmann::json j;
    j["lambda"] = c.lambda;
    j["mu"] = c.mu;
    j["beta"] = c.beta;
    j["sigma"] = c.sigma;
    j["max_iter"] = c.max_iter;
    j["seed"] = c.seed;
    j["cg_tol"] = c.cg_tol;
    j["cg_max_iter"] = c.cg_max_iter;
    j["objective_log_every"] = c.objective_log_every;
    j["graph_halfwidth"] = c.graph_halfwidth;
    j["paper_term_weights"] = c.paper_term_weights;
    j["early_stop"] = c.early_stop;
    j["early_stop_tol"] = c.early_stop_tol;
    j["early_stop_window"] = c.early_stop_window;
    if (!c.plan.row_factors.empty()) j["plan"] = format_plan(c.plan);
    if (c.ranks.factor_count() > 0) j["ranks"] = c.ranks.upper_triangle();
    return j;
}

inline void write_manifest(const ExperimentSpec& spec, const std::string& mode,
                           const nlohmann::json& extra) {
    nlohmann::json j;
    j["tool"] = "fctnfuse";
    j["version"] = kVersion;
    j["mode"] = mode;
    j["run_id"] = spec.resolved_run_id();
    j["inputs"] = {{"ref", spec.ref_path},
                   {"hsi", spec.hsi_path},
                   {"msi", spec.msi_path},
                   {"srf", spec.srf_path}};
    j["degradation"] = {{"p", spec.p},
                        {"snr_hsi_db", spec.snr_hsi_db ? nlohmann::json(*spec.snr_hsi_db)
                                                       : nlohmann::json()},
                        {"snr_msi_db", spec.snr_msi_db ? nlohmann::json(*spec.snr_msi_db)
                                                       : nlohmann::json()},
                        {"noise_seed_hsi", spec.config.seed ^ kHsiNoiseSalt},
                        {"noise_seed_msi", spec.config.seed ^ kMsiNoiseSalt}};
    j["fusion"] = config_json(spec);
    if (!spec.synth.empty())
        j["synth"] = {{"kind", spec.synth},
                      {"rows", spec.synth_rows},
                      {"cols", spec.synth_cols},
                      {"bands", spec.synth_bands},
                      {"msi_bands", spec.synth_msi_bands},
                      {"materials", spec.synth_materials}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();

    const auto path =
        std::filesystem::path(spec.out_dir) / (spec.resolved_run_id() + ".manifest.json");
    std::ofstream out(path);
    require(out.good(), "manifest: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace detail

struct SimulateResult {
    std::string ref_path, hsi_path, msi_path, srf_path;
};

/// Generates (or loads) a reference cube, degrades it into the HSI/MSI pair
/// and writes everything plus a manifest into out_dir.
inline SimulateResult run_simulate(ExperimentSpec spec) {
    std::filesystem::create_directories(spec.out_dir);
    const std::filesystem::path out(spec.out_dir);

    DenseTensor ref;
    Matrix srf;
    if (!spec.synth.empty()) {
        if (spec.synth == "fctn") {
            require(!spec.config.plan.row_factors.empty(),
                    "simulate: synthetic model cube needs --plan");
            require(spec.config.ranks.factor_count() ==
                        spec.config.plan.scales() + 1,
                    "simulate: synthetic model cube needs --ranks");
            ref = fctn_model_cube(spec.config.plan, spec.config.ranks, spec.synth_bands,
                                  spec.config.seed);
        } else if (spec.synth == "smooth") {
            ref = smooth_spectra_cube(spec.synth_rows, spec.synth_cols, spec.synth_bands,
                                      spec.synth_materials, spec.config.seed);
        } else {
            throw std::invalid_argument("simulate: unknown synthetic kind '" + spec.synth +
                                        "' (expected fctn or smooth)");
        }
        srf = spec.srf_path.empty() ? band_average_srf(spec.synth_msi_bands, ref.extent(2))
                                    : load_srf_csv(spec.srf_path);
        spec.ref_path = (out / "ref.npy").string();
        write_npy(spec.ref_path, ref);
        if (spec.srf_path.empty()) {
            spec.srf_path = (out / "srf.csv").string();
            save_srf_csv(spec.srf_path, srf);
        }
    } else {
        require(!spec.ref_path.empty(), "simulate: need --ref or --synth");
        require(!spec.srf_path.empty(), "simulate: need --srf");
        ref = read_npy(spec.ref_path);
        srf = load_srf_csv(spec.srf_path);
    }
    require(ref.order() == 3, "simulate: reference must be rows x cols x bands");

    DenseTensor hsi = spatial_downsample(ref, spec.p);
    if (spec.snr_hsi_db)
        hsi = add_noise(hsi, *spec.snr_hsi_db, spec.config.seed ^ kHsiNoiseSalt);
    DenseTensor msi = spectral_downsample(ref, srf);
    if (spec.snr_msi_db)
        msi = add_noise(msi, *spec.snr_msi_db, spec.config.seed ^ kMsiNoiseSalt);

    SimulateResult result;
    result.ref_path = spec.ref_path;
    result.srf_path = spec.srf_path;
    result.hsi_path = (out / "hsi.npy").string();
    result.msi_path = (out / "msi.npy").string();
    write_npy(result.hsi_path, hsi);
    write_npy(result.msi_path, msi);

    spec.hsi_path = result.hsi_path;
    spec.msi_path = result.msi_path;
    detail::write_manifest(spec, "simulate",
                           {{"outputs", {{"hsi", result.hsi_path},
                                         {"msi", result.msi_path},
                                         {"ref", result.ref_path},
                                         {"srf", result.srf_path}}}});
    return result;
}

struct FuseResult {
    std::string estimate_path;
    std::optional<MetricReport> metrics;
    int iterations = 0;
    double seconds = 0.0;
    double final_objective = 0.0;
    FusionResult fusion;
};

/// Loads the observation pair, runs the solver, writes the reconstruction,
/// the objective trace, a metrics row (when a reference is available) and the
/// manifest.
inline FuseResult run_fuse(const ExperimentSpec& spec) {
    require(!spec.hsi_path.empty() && !spec.msi_path.empty() && !spec.srf_path.empty(),
            "fuse: need --hsi, --msi and --srf");
    std::filesystem::create_directories(spec.out_dir);
    const std::filesystem::path out(spec.out_dir);
    const std::string run_id = spec.resolved_run_id();

    const DenseTensor hsi = read_npy(spec.hsi_path);
    const DenseTensor msi = read_npy(spec.msi_path);
    const Matrix srf = load_srf_csv(spec.srf_path);

    const auto t0 = std::chrono::steady_clock::now();
    FusionResult fusion = fuse(hsi, msi, srf, spec.config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    FuseResult result;
    result.estimate_path = (out / (run_id + ".xhat.npy")).string();
    write_npy(result.estimate_path, fusion.estimate);
    detail::write_objective_csv((out / (run_id + ".objective.csv")).string(),
                                fusion.state.objective_history,
                                spec.config.objective_log_every);

    result.iterations = fusion.state.iterations_run;
    result.seconds = seconds;
    result.final_objective = fusion.state.objective_history.back();

    if (!spec.ref_path.empty()) {
        const DenseTensor ref = read_npy(spec.ref_path);
        require(ref.same_shape(fusion.estimate), "fuse: reference shape mismatch");
        const std::size_t ratio = msi.extent(0) / hsi.extent(0);
        result.metrics =
            evaluate_metrics(ref, fusion.estimate, static_cast<double>(ratio));
    }
    detail::append_metrics_csv((out / "metrics.csv").string(), run_id,
                               result.metrics ? &*result.metrics : nullptr,
                               result.iterations, seconds);
    detail::write_manifest(spec, "fuse",
                           {{"outputs", {{"estimate", result.estimate_path}}},
                            {"final_objective", result.final_objective}});

    result.fusion = std::move(fusion);
    return result;
}

/// Runs fuse twice with identical seeds — once with the configured beta, once
/// with beta = 0 — and reports both rows.
inline std::pair<FuseResult, FuseResult> run_ablate(const ExperimentSpec& spec) {
    ExperimentSpec with = spec;
    with.run_id = spec.resolved_run_id() + "-wgr";
    ExperimentSpec without = spec;
    without.run_id = spec.resolved_run_id() + "-nowgr";
    without.config.beta = 0.0;
    FuseResult a = run_fuse(with);
    FuseResult b = run_fuse(without);
    if (a.metrics && b.metrics)
        std::cout << "ablate: sam(beta=" << spec.config.beta << ") = " << a.metrics->sam_deg
                  << " deg, sam(beta=0) = " << b.metrics->sam_deg
                  << " deg, delta = " << (b.metrics->sam_deg - a.metrics->sam_deg)
                  << " deg\n";
    return {std::move(a), std::move(b)};
}

namespace detail {

struct CheckReporter {
    int failures = 0;
    void operator()(const std::string& name, bool ok, const std::string& tolerance) {
        std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << " (" << tolerance << ")\n";
        if (!ok) ++failures;
    }
};

inline double rel_err(const DenseTensor& a, const DenseTensor& b) {
    require(a.same_shape(b), "rel_err: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        num += d * d;
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace detail

/// Self-test: executes the reference-contraction oracle, the unfolding and
/// tensorization round-trips, and the spectral-operator adjoint/curvature
/// checks on tiny random instances. Returns the number of failed checks.
/// `inject_fault` flips a sign in one composite to prove the identity check
/// is not vacuous.
inline int run_oracle_check(bool inject_fault = false) {
    detail::CheckReporter check;
    std::mt19937_64 rng(20240718u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> extent_dist(2, 4), rank_dist(1, 3);

    // Random tiny decompositions: full contraction against the brute-force
    // reference, then the factorization identity at every factor.
    bool contraction_ok = true, identity_ok = true;
    for (int inst = 0; inst < 30; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(inst % 3);
        RankMatrix ranks(n, 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) ranks.set(i, j, rank_dist(rng));
        std::vector<std::size_t> extents(n);
        for (auto& e : extents) e = extent_dist(rng);
        FctnFactorSet f = random_init(ranks, extents, rng());

        const DenseTensor reference = contract_reference(f);
        const DenseTensor fast = contract_full(f);
        if (detail::rel_err(fast, reference) > 1e-10) contraction_ok = false;

        for (std::size_t t = 0; t < n; ++t) {
            Matrix composite = composite_except(f, t);
            if (inject_fault && inst == 0 && t == 0) composite(0, 0) = -composite(0, 0);
            const Matrix lhs = unfold(reference, t);
            const Matrix rhs = factor_unfold(f, t) * composite.transpose();
            if ((lhs - rhs).norm() > 1e-10 * std::max(lhs.norm(), 1e-300))
                identity_ok = false;
        }
    }
    check("contraction matches brute-force reference", contraction_ok, "rel 1e-10");
    check("factorization identity at every factor", identity_ok, "rel 1e-10");

    // Unfold/fold and permute round-trips, exact.
    bool unfold_ok = true, permute_ok = true, reshape_ok = true;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t order = 1 + static_cast<std::size_t>(inst % 6);
        std::vector<std::size_t> shape(order);
        for (auto& e : shape) e = extent_dist(rng);
        DenseTensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = unit(rng);

        for (std::size_t m = 0; m < order; ++m) {
            DenseTensor back = fold(unfold(t, m), m, shape);
            for (std::size_t i = 0; i < t.size(); ++i)
                if (back[i] != t[i]) unfold_ok = false;
        }
        std::vector<std::size_t> perm(order);
        for (std::size_t k = 0; k < order; ++k) perm[k] = k;
        std::shuffle(perm.begin(), perm.end(), rng);
        DenseTensor rt = permute(permute(t, perm), inverse_permutation(perm));
        for (std::size_t i = 0; i < t.size(); ++i)
            if (rt[i] != t[i]) permute_ok = false;

        DenseTensor rs = reshape(reshape(t, {t.size()}), shape);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (rs[i] != t[i]) reshape_ok = false;
    }
    check("fold(unfold) identity", unfold_ok, "exact");
    check("permute round-trip", permute_ok, "exact");
    check("reshape round-trip", reshape_ok, "exact");

    // Tensorization bijection and the downsampling commutation.
    bool bijection_ok = true, commute_ok = true;
    {
        TensorizationPlan plan{{4, 3}, {4, 2}, 0};
        DenseTensor x({plan.rows(), plan.cols(), 3});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = unit(rng);
        const DenseTensor rt = detensorize(tensorize(x, plan), plan);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (rt[i] != x[i]) bijection_ok = false;

        const std::size_t p = 2;
        const DenseTensor via_image = tensorize(spatial_downsample(x, p), plan.coarsened(p));
        const DenseTensor via_mode =
            mode_product(tensorize(x, plan),
                         first_scale_average(plan.row_factors[0], plan.col_factors[0], p), 0);
        if (detail::rel_err(via_image, via_mode) > 1e-12) commute_ok = false;
    }
    check("tensorize bijection", bijection_ok, "exact");
    check("downsample/tensorize commutation", commute_ok, "rel 1e-12");

    // Spectral normal-equation operator: adjoint symmetry and curvature sign.
    bool adjoint_ok = true, curvature_ok = true;
    {
        const Eigen::Index bands = 6, width = 5, msi_bands = 3;
        for (int inst = 0; inst < 10; ++inst) {
            const Matrix o = Matrix::NullaryExpr(12, width, [&]() { return unit(rng); });
            const Matrix h = Matrix::NullaryExpr(9, width, [&]() { return unit(rng); });
            const Matrix r = Matrix::NullaryExpr(msi_bands, bands, [&]() { return unit(rng); });
            DenseTensor y({3, 3, static_cast<std::size_t>(bands)});
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = unit(rng);
            const SpectralGraph g = build_weights(y, 1.0, 2);
            const Matrix og = o.transpose() * o, hg = h.transpose() * h,
                         rg = r.transpose() * r;
            const double beta = 0.3, lambda = 0.7;
            const auto apply = [&](const Matrix& u) {
                return Matrix(lambda * (rg * u * og) + u * hg + beta * (g.laplacian * u));
            };
            const Matrix a = Matrix::NullaryExpr(bands, width, [&]() { return unit(rng) - 0.5; });
            const Matrix b = Matrix::NullaryExpr(bands, width, [&]() { return unit(rng) - 0.5; });
            const double lab = apply(a).cwiseProduct(b).sum();
            const double alb = a.cwiseProduct(apply(b)).sum();
            const double scale = std::max({std::abs(lab), std::abs(alb), 1.0});
            if (std::abs(lab - alb) > 1e-10 * scale) adjoint_ok = false;
            if (apply(a).cwiseProduct(a).sum() < -1e-10 * scale) curvature_ok = false;
        }
    }
    check("spectral operator adjoint symmetry", adjoint_ok, "rel 1e-10");
    check("spectral operator curvature >= 0", curvature_ok, "rel 1e-10");

    // Conjugate gradients against a dense direct solve.
    bool cg_ok = true;
    for (int inst = 0; inst < 10; ++inst) {
        const Eigen::Index m = 6;
        Matrix a = Matrix::NullaryExpr(m, m, [&]() { return unit(rng) - 0.5; });
        Matrix spd = a * a.transpose() + Matrix::Identity(m, m);
        Matrix rhs = Matrix::NullaryExpr(m, 1, [&]() { return unit(rng) - 0.5; });
        const double tol = 1e-10;
        const CgResult res =
            cg_solve([&](const Matrix& x) { return Matrix(spd * x); }, rhs, tol, 200);
        const Matrix direct = spd.ldlt().solve(rhs);
        if (!res.converged ||
            (res.solution - direct).norm() > 10 * tol * std::max(direct.norm(), 1.0))
            cg_ok = false;
    }
    check("cg agrees with dense direct solve", cg_ok, "10x cg tol");

    std::cout << (check.failures == 0 ? "all checks passed\n"
                                      : std::to_string(check.failures) + " check(s) failed\n");
    return check.failures;
}

}  // namespace fctn
