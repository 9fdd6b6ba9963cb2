// Acceptance checks. Usage: acceptance [criterion...]; no arguments runs all.
// Prints one PASS/FAIL line per criterion; exit status 1 if a blocking one fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "test_util.hpp"
#include "topomg/bench.hpp"

using namespace topomg;
using topomg::test::to_eigen;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    bool blocking = true;
};

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::filesystem::path artifact_dir(const std::string& name) {
    const std::filesystem::path d = std::filesystem::current_path() / "acceptance_out" / name;
    std::filesystem::create_directories(d);
    return d;
}

struct System {
    Problem pb;
    Vector rho;
    std::shared_ptr<const SparseMatrix> k;
    Eigen::MatrixXd nns;
};

System make_system(ProblemKind kind, const std::vector<Index>& dims, Vector rho, double penalty) {
    System s;
    s.pb = make_problem(kind, dims);
    s.rho = std::move(rho);
    s.k = std::make_shared<const SparseMatrix>(
        assemble_stiffness(s.pb.mesh, s.pb.bc, element_moduli(SimpLaw::with_penalty(penalty), s.rho)));
    s.nns = nullspace_matrix(rigid_body_modes(s.pb.mesh, s.pb.bc.fixed_dofs));
    return s;
}

Eigen::VectorXd dense_cholesky_solve(const SparseMatrix& k, const Vector& b) {
    return k.to_dense().llt().solve(to_eigen(b));
}

double sparse_galerkin_error(const MgHierarchy& h) {
    double worst = 0.0;
    for (std::size_t l = 0; l + 1 < h.levels.size(); ++l) {
        const SparseMatrix& p = h.levels[l].prolongation;
        const SparseMatrix ref = multiply(p.transpose(), multiply(*h.levels[l].op, p));
        worst = std::max(worst, add(*h.levels[l + 1].op, ref, 1.0, -1.0).frobenius_norm() / ref.frobenius_norm());
    }
    return worst;
}

MgHierarchy build(Strategy s, const System& sys, Index coarse, SmootherKind smoother = SmootherKind::block_jacobi) {
    PreconditionerConfig pc;
    pc.strategy = s;
    pc.coarse_max_dofs = coarse;
    pc.smoother.kind = smoother;
    pc.smoother.block_size = sys.pb.mesh.dim();
    return build_preconditioner(pc, sys.pb.mesh, sys.k, sys.nns);
}

// 1 -------------------------------------------------------------------------------

Outcome linear_solves() {
    const Stopwatch clock;
    const System sys = make_system(ProblemKind::cantilever2d, {64, 32}, test::random_vector(64 * 32, 11, 0.01, 1.0), 3.0);
    const Vector& b = sys.pb.bc.load;
    const Eigen::VectorXd ref = dense_cholesky_solve(*sys.k, b);
    SolveConfig sc;
    sc.rtol = 1e-7;
    bool ok = true;
    std::string detail;
    for (Strategy s : {Strategy::gmg, Strategy::amg, Strategy::hybrid}) {
        const MgHierarchy h = build(s, sys, 150);
        const auto [x, rec] = preconditioned_solve(*sys.k, b, Vector(b.size(), 0.0), h, sc);
        const double err = (to_eigen(x) - ref).norm() / ref.norm();
        ok = ok && rec.converged && err <= 1e-6;
        detail += to_string(s) + " err=" + fmt("%.2e", err) + " iters=" + std::to_string(rec.iterations) + "; ";
    }
    const double t = clock.seconds();
    ok = ok && t < 30.0;
    return {ok, detail + "time=" + fmt("%.1f", t) + "s (< 30 s)"};
}

// 2 -------------------------------------------------------------------------------

Outcome eigensolves() {
    const Stopwatch clock;
    const double p = 3.0;
    const System sys = make_system(ProblemKind::column_stability, {16, 64}, Vector(16 * 64, 0.4), p);
    const Vector u = test::from_eigen(dense_cholesky_solve(*sys.k, sys.pb.bc.load));
    const SparseMatrix ks = assemble_stress_stiffness(sys.pb.mesh, sys.pb.bc, u,
                                                      element_sigma_moduli(StressSimpLaw{1.0, p, 0.1}, sys.rho));
    const Stopwatch davidson_clock;
    const MgHierarchy h = build(Strategy::amg, sys, 150);
    const EigenResult eig = generalized_davidson(ks, *sys.k, as_preconditioner(h), DavidsonConfig{});
    const double t_davidson = davidson_clock.seconds();

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> oracle(ks.to_dense(), sys.k->to_dense(),
                                                                     Eigen::EigenvaluesOnly);
    const Eigen::VectorXd all = oracle.eigenvalues();
    bool ok = eig.converged_count == 6 && eig.eigenvalues.size() == 6;
    double worst = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(6, eig.eigenvalues.size()); ++i) {
        const double ref = all(all.size() - 1 - static_cast<Eigen::Index>(i));
        worst = std::max(worst, std::abs(eig.eigenvalues[i] - ref) / std::abs(ref));
    }
    const double t = clock.seconds();
    ok = ok && worst <= 1e-6 && t < 60.0;
    return {ok, "converged=" + std::to_string(eig.converged_count) + " max rel err=" + fmt("%.2e", worst) +
                    " davidson iters=" + std::to_string(eig.iterations) + " davidson=" + fmt("%.2f", t_davidson) +
                    "s total=" + fmt("%.1f", t) + "s (< 60 s)"};
}

// 3 -------------------------------------------------------------------------------

double compliance_of(const Problem& pb, const FilterOperator& f, const SimpLaw& law, const Vector& alpha) {
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, f.apply(alpha)));
    return to_eigen(pb.bc.load).dot(dense_cholesky_solve(k, pb.bc.load));
}

std::vector<double> top_eigenvalues(const Problem& pb, const FilterOperator& f, const SimpLaw& law,
                                    const StressSimpLaw& sl, const Vector& alpha, int count) {
    const Vector rho = f.apply(alpha);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho));
    const Vector u = test::from_eigen(dense_cholesky_solve(k, pb.bc.load));
    const SparseMatrix ks = assemble_stress_stiffness(pb.mesh, pb.bc, u, element_sigma_moduli(sl, rho));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(ks.to_dense(), k.to_dense(),
                                                                  Eigen::EigenvaluesOnly);
    std::vector<double> out;
    const auto n = ges.eigenvalues().size();
    for (int i = 0; i < count; ++i) out.push_back(ges.eigenvalues()(n - 1 - i));
    return out;
}

Outcome gradient_checks() {
    std::string detail;
    bool ok = true;
    {
        const Problem pb = make_problem(ProblemKind::cantilever2d, {8, 4});
        const ElementKernel kernel(pb.mesh, 0.3);
        const auto f = build_filter(pb.mesh, 1.5);
        const SimpLaw law = SimpLaw::with_penalty(3.0);
        const Vector alpha = test::random_vector(32, 7, 0.2, 1.0);
        const Vector rho = f.apply(alpha);
        const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel);
        const Vector u = test::from_eigen(dense_cholesky_solve(k, pb.bc.load));
        const Evaluation ev = compliance_and_sensitivity(pb.mesh, kernel, f, law, rho, pb.bc.load, u);
        double worst = 0.0;
        const double h = 1e-6;
        for (Index e = 0; e < 32; ++e) {
            Vector ap = alpha, am = alpha;
            ap[e] += h;
            am[e] -= h;
            const double fd = (compliance_of(pb, f, law, ap) - compliance_of(pb, f, law, am)) / (2 * h);
            worst = std::max(worst, std::abs(ev.d_alpha[e] - fd) / std::abs(fd));
        }
        ok = ok && worst <= 1e-4;
        detail += "compliance (32 elements) max rel err=" + fmt("%.2e", worst) + " (<= 1e-4); ";
    }
    {
        const System sys = make_system(ProblemKind::column_stability, {8, 16}, Vector(128, 1.0), 3.0);
        const Problem& pb = sys.pb;
        const ElementKernel kernel(pb.mesh, 0.3);
        const auto f = build_filter(pb.mesh, 1.5);
        const double p = 3.0;
        const SimpLaw law = SimpLaw::with_penalty(p);
        const StressSimpLaw sl{1.0, p, 0.1};
        const Vector alpha = test::random_vector(128, 31, 0.4, 1.0);
        const Vector rho = f.apply(alpha);
        auto k = std::make_shared<const SparseMatrix>(
            assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel));
        PreconditionerConfig pc;
        pc.strategy = Strategy::amg;
        const MgHierarchy h = build_preconditioner(pc, pb.mesh, k, sys.nns);
        SolveConfig sc;
        sc.rtol = 1e-12;
        const Vector u = preconditioned_solve(*k, pb.bc.load, Vector(k->rows(), 0.0), h, sc).first;
        const AdjointSolver adjoint = [&](std::span<const double> rhs) {
            return preconditioned_solve(*k, rhs, Vector(rhs.size(), 0.0), h, sc);
        };
        DavidsonConfig dc;
        dc.rtol_residual = 1e-10;
        const StabilityEvaluation se = stability_objective_and_sensitivity(
            pb.mesh, kernel, pb.bc, f, law, sl, rho, u, *k, as_preconditioner(h), adjoint, dc, {});
        const auto objective = [&](const Vector& a) { return pnorm_aggregate(top_eigenvalues(pb, f, law, sl, a, 6)); };
        const double fh = 1e-5;
        Eigen::VectorXd fd(128);
        for (Index e = 0; e < 128; ++e) {
            Vector ap = alpha, am = alpha;
            ap[e] += fh;
            am[e] -= fh;
            fd(e) = (objective(ap) - objective(am)) / (2 * fh);
        }
        const Eigen::VectorXd g = to_eigen(se.eval.d_alpha);
        const double rel = (g - fd).norm() / fd.norm();
        const double worst = (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
        ok = ok && se.converged_modes == 6 && rel <= 1e-3 && worst <= 1e-3;
        detail += "stability p-norm (128 elements) rel err=" + fmt("%.2e", rel) + " max componentwise=" +
                  fmt("%.2e", worst) + " (<= 1e-3)";
    }
    return {ok, detail};
}

// 4 -------------------------------------------------------------------------------

Outcome multigrid_invariants() {
    bool ok = true;
    std::ostringstream detail;

    double galerkin = 0.0, nullspace = 0.0, linearity = 0.0;
    int hierarchies = 0, isolated = 0;
    const System s2 = make_system(ProblemKind::cantilever2d, {64, 32}, test::random_vector(64 * 32, 99, 0.01, 1.0), 3.0);
    const System s3 = make_system(ProblemKind::cantilever3d, {16, 8, 8}, test::random_vector(16 * 64, 98, 0.01, 1.0), 3.0);
    for (const System* sys : {&s2, &s3}) {
        for (Strategy s : {Strategy::gmg, Strategy::amg, Strategy::hybrid}) {
            for (Index coarse : {Index{150}, Index{2500}}) {
                const MgHierarchy h = build(s, *sys, coarse);
                galerkin = std::max(galerkin, sparse_galerkin_error(h));
                ++hierarchies;
            }
            // V-cycle linearity with point Jacobi.
            const MgHierarchy h = build(s, *sys, 150, SmootherKind::weighted_jacobi);
            const Index n = sys->k->rows();
            const Vector x = test::random_vector(n, 1), y = test::random_vector(n, 2);
            Vector comb(n);
            for (Index i = 0; i < n; ++i) comb[i] = 2.0 * x[i] - 3.0 * y[i];
            const Eigen::VectorXd mx = to_eigen(h.vcycle(x)), my = to_eigen(h.vcycle(y));
            const Eigen::VectorXd mc = to_eigen(h.vcycle(comb));
            linearity = std::max(linearity, (mc - (2.0 * mx - 3.0 * my)).norm() / mc.norm());
        }
        const auto blocks = uniform_blocks(sys->k->rows(), sys->pb.mesh.dim());
        const Aggregation agg = aggregate(strength_of_connection(*sys->k, 0.003, blocks));
        const TentativeProlongation t = tentative_prolongation(agg, blocks, sys->nns);
        const Eigen::MatrixXd rep = t.p.to_dense() * t.coarse_nullspace;
        // Isolated nodes (no strong neighbour) carry no coarse dofs.
        for (Index node = 0; node + 1 < static_cast<Index>(blocks.size()); ++node) {
            if (agg.aggregate_of[node] < 0) {
                ++isolated;
                continue;
            }
            for (Index r = blocks[node]; r < blocks[node + 1]; ++r) {
                nullspace = std::max(nullspace, (rep.row(r) - sys->nns.row(r)).cwiseAbs().maxCoeff() /
                                                    sys->nns.cwiseAbs().maxCoeff());
            }
        }
    }
    ok = ok && galerkin <= 1e-12 && nullspace <= 1e-10 && linearity <= 1e-10;
    detail << "galerkin max rel=" << fmt("%.2e", galerkin) << " over " << hierarchies << " hierarchies; ";
    detail << "tentative nullspace=" << fmt("%.2e", nullspace) << " (" << isolated << " isolated nodes excluded); vcycle linearity=" << fmt("%.2e", linearity);

    double unity = 0.0;
    for (const std::vector<Index>& dims : {std::vector<Index>{64, 32}, std::vector<Index>{33, 17},
                                           std::vector<Index>{7, 5}, std::vector<Index>{9, 5, 3}}) {
        const int dpn = static_cast<int>(dims.size());
        const SparseMatrix p = geometric_prolongation(dims, dpn);
        for (double v : p.multiply(Vector(p.cols(), 1.0))) unity = std::max(unity, std::abs(v - 1.0));
    }
    ok = ok && unity <= 1e-14;
    detail << "; partition of unity=" << fmt("%.1e", unity);

    const System small = make_system(ProblemKind::cantilever2d, {16, 8}, test::random_vector(128, 5, 0.01, 1.0), 3.0);
    double base = 0.0;
    for (Strategy s : {Strategy::gmg, Strategy::amg, Strategy::hybrid}) {
        const MgHierarchy h = build(s, small, 1000000);
        const Vector b = test::random_vector(small.k->rows(), 6);
        const Eigen::VectorXd ref = dense_cholesky_solve(*small.k, b);
        base = std::max(base, (to_eigen(h.vcycle(b)) - ref).norm() / ref.norm());
        ok = ok && h.level_count() == 1;
    }
    ok = ok && base <= 1e-12;
    detail << "; single-level vcycle vs direct=" << fmt("%.2e", base);
    return {ok, detail.str()};
}

// 5 -------------------------------------------------------------------------------

Outcome coarse_bound_robustness() {
    const Stopwatch clock;
    OptimizationConfig cfg;
    cfg.problem = ProblemKind::cantilever2d;
    cfg.resolution = {256, 128};
    cfg.preconditioner.strategy = Strategy::amg;
    cfg.preconditioner.coarse_max_dofs = 150;
    const std::vector<Index> bounds{150, 2500, 10000};
    for (Strategy s : {Strategy::amg, Strategy::gmg}) {
        for (Index b : bounds) {
            if (s == Strategy::amg && b == 150) continue;  // the primary solve
            PreconditionerConfig pc = cfg.preconditioner;
            pc.strategy = s;
            pc.coarse_max_dofs = b;
            cfg.shadow_preconditioners.emplace_back(to_string(s) + "_" + std::to_string(b), pc);
        }
    }
    cfg.shadow_every = 1;
    const OptimizationResult res = run_optimization(cfg);
    const auto dir = artifact_dir("coarse_bounds");
    write_history_csv(dir / "history.csv", res.history);
    {
        std::ofstream out(dir / "shadow.csv");
        out << "step,label,levels,solve_iters,converged\n";
        for (const auto& r : res.shadow) {
            out << r.step << ',' << r.label << ',' << r.levels << ',' << r.solve_iters << ',' << r.converged << '\n';
        }
    }

    std::map<std::string, int> worst;
    for (const auto& r : res.history) worst["amg_150"] = std::max(worst["amg_150"], r.solve_iters);
    for (const auto& r : res.shadow) worst[r.label] = std::max(worst[r.label], r.solve_iters);
    const int amg_lo = std::min({worst["amg_150"], worst["amg_2500"], worst["amg_10000"]});
    const int amg_hi = std::max({worst["amg_150"], worst["amg_2500"], worst["amg_10000"]});
    const double amg_spread = double(amg_hi - amg_lo) / amg_lo;
    const double gmg_ratio = double(worst["gmg_150"]) / worst["gmg_10000"];
    std::ostringstream d;
    d << "penalty " << res.history.back().penalty << " after " << res.history.size() << " steps; max iters";
    for (const auto& [label, it] : worst) d << ' ' << label << '=' << it;
    d << "; amg spread=" << fmt("%.3f", amg_spread) << " (<= 0.35); gmg 150/10000=" << fmt("%.3f", gmg_ratio)
      << " (>= 1.25); time=" << fmt("%.0f", clock.seconds()) << "s";
    return {amg_spread <= 0.35 && gmg_ratio >= 1.25 && res.history.back().penalty == 4.0, d.str()};
}

// 6 -------------------------------------------------------------------------------

SolveConfig grid_solver() {
    SolveConfig sc;
    sc.rtol = default_solver_rtol(ProblemKind::grid_diagnostic);
    return sc;
}

Outcome grid_diagnostic() {
    const Stopwatch clock;
    GridConfig g;
    g.strategies = {Strategy::gmg, Strategy::amg};
    PreconditionerConfig pc;
    pc.coarse_max_dofs = 700;
    const auto points = run_grid_sweep(g, pc, grid_solver(), 12345);
    const auto dir = artifact_dir("grid");
    std::vector<GridPoint> gmg, amg;
    for (const auto& p : points) (p.strategy == Strategy::gmg ? gmg : amg).push_back(p);
    write_grid_csv(dir / "grid_gmg.csv", gmg);
    write_grid_csv(dir / "grid_amg.csv", amg);
    std::ofstream report(dir / "report.csv");
    print_report(compare_report({dir / "grid_gmg.csv", dir / "grid_amg.csv"}), report);

    const auto find = [&](Strategy s, Index px, Index py) -> const GridPoint& {
        return *std::find_if(points.begin(), points.end(),
                             [&](const GridPoint& p) { return p.strategy == s && p.pitch_x == px && p.pitch_y == py; });
    };
    bool five_levels = true;
    for (const auto& p : gmg) five_levels = five_levels && p.levels == 5;
    const GridPoint &g_worst = find(Strategy::gmg, 128, 8), &a_worst = find(Strategy::amg, 128, 8);
    const GridPoint &g_open = find(Strategy::gmg, 128, 128), &a_open = find(Strategy::amg, 128, 128);
    const double r_worst = double(g_worst.iterations) / a_worst.iterations;
    const double r_open = double(g_open.iterations) / a_open.iterations;
    const double t = clock.seconds();
    std::ostringstream d;
    d << "gmg levels=5:" << (five_levels ? "yes" : "no") << "; (pitch_x=128,pitch_y=8) gmg=" << g_worst.iterations
      << (g_worst.converged ? "" : "(cap)") << " amg=" << a_worst.iterations << " ratio=" << fmt("%.2f", r_worst)
      << " (>= 2.5); (128,128) gmg=" << g_open.iterations << " amg=" << a_open.iterations
      << " ratio=" << fmt("%.2f", r_open) << " (<= 1.5); sweep time=" << fmt("%.0f", t) << "s (< 600 s)";
    return {five_levels && r_worst >= 2.5 && r_open <= 1.5 && t < 600.0, d.str()};
}

// 7 -------------------------------------------------------------------------------

Outcome controller() {
    bool ok = true;
    std::ostringstream d;
    {
        AdaptiveHybridController c(6);
        const std::vector<std::pair<int, int>> seq{{150, 6}, {200, 6}, {201, 5}, {199, 5}, {1000, 4}, {0, 4}};
        for (const auto& [iters, expect] : seq) {
            const int before = c.n_geo();
            const RebuildDirective r = c.adapt_after_solve(iters);
            ok = ok && c.n_geo() == expect && (r == RebuildDirective::rebuild) == (expect < before);
        }
        d << "threshold sequence ok=" << ok;
    }
    {
        AdaptiveHybridController c(4);
        int prev = c.n_geo();
        bool mono = true;
        for (int it : {500, 500, 500, 500, 10, 900, 201, 50}) {
            c.adapt_after_solve(it);
            mono = mono && c.n_geo() <= prev && c.n_geo() >= 2;
            prev = c.n_geo();
        }
        ok = ok && mono && c.n_geo() == 2;
        d << "; floor and monotone ok=" << mono;
    }
    {
        AdaptiveHybridController c(2);
        const bool keep = c.adapt_after_solve(5000) == RebuildDirective::keep && c.n_geo() == 2;
        ok = ok && keep;
        d << "; no demotion below 2 ok=" << keep;
    }
    return {ok, d.str()};
}

// 8 -------------------------------------------------------------------------------

Outcome hybrid_sandwich() {
    const GridSpec spec{264, 4, 128, 8};
    PreconditionerConfig pc;
    pc.coarse_max_dofs = 700;
    pc.strategy = Strategy::amg;
    const GridPoint amg = run_grid_point(spec, pc, grid_solver());
    pc.strategy = Strategy::hybrid;
    pc.n_geo = 2;  // coarse geometric elements span 4 fine elements = feature width
    const GridPoint hyb = run_grid_point(spec, pc, grid_solver());
    const double it_ratio = double(hyb.iterations) / amg.iterations;
    const double setup_ratio = hyb.setup_s / amg.setup_s;
    std::ostringstream d;
    d << "(pitch_x=128,pitch_y=8) hybrid iters=" << hyb.iterations << " amg iters=" << amg.iterations
      << " ratio=" << fmt("%.3f", it_ratio) << " (<= 1.3); setup hybrid=" << fmt("%.3f", hyb.setup_s)
      << "s amg=" << fmt("%.3f", amg.setup_s) << "s ratio=" << fmt("%.3f", setup_ratio) << " (<= 0.5)";
    return {hyb.converged && amg.converged && it_ratio <= 1.3 && setup_ratio <= 0.5, d.str()};
}

// 9 -------------------------------------------------------------------------------

Outcome end_to_end() {
    OptimizationConfig cfg;
    cfg.problem = ProblemKind::cantilever2d;
    cfg.resolution = {96, 48};
    const Stopwatch clock;
    const OptimizationResult a = run_optimization(cfg);
    const double t = clock.seconds();
    write_history_csv(artifact_dir("end_to_end") / "history.csv", a.history);
    const OptimizationResult b = run_optimization(cfg);

    double energy = 0.0;
    bool all_converged = true;
    for (const auto& s : a.history) {
        energy = std::max(energy, std::abs(s.energy - s.compliance) / s.compliance);
        all_converged = all_converged && s.solve_converged;
    }
    bool same = a.history.size() == b.history.size() && a.rho == b.rho;
    for (std::size_t i = 0; same && i < a.history.size(); ++i) {
        same = a.history[i].objective == b.history[i].objective && a.history[i].solve_iters == b.history[i].solve_iters;
    }
    const double vol = a.history.back().volume;
    const bool complete = a.history.back().penalty == 4.0 && a.history.size() == penalty_per_step(cfg.schedule).size();
    std::ostringstream d;
    d << a.history.size() << " steps to penalty " << a.history.back().penalty << " in " << fmt("%.0f", t)
      << "s (< 900 s); volume=" << fmt("%.6f", vol) << " (0.4 +- 1e-3); max |u^T K u - f^T u|/f^T u="
      << fmt("%.2e", energy) << " (<= rtol " << fmt("%.0e", cfg.solver.rtol) << "); all solves converged="
      << all_converged << "; rerun identical=" << same << "; final compliance=" << fmt("%.6g", a.history.back().objective);
    return {complete && t < 900.0 && std::abs(vol - 0.4) <= 1e-3 && energy <= cfg.solver.rtol && all_converged && same,
            d.str()};
}

// 10 ------------------------------------------------------------------------------

Outcome smoother_study() {
    const auto dir = artifact_dir("smoothers");
    std::vector<std::filesystem::path> csvs;
    std::map<std::pair<Strategy, SmootherKind>, std::vector<StepRecord>> runs;
    const std::size_t expected = penalty_per_step(PenaltySchedule{}).size();
    bool complete = true;
    std::ostringstream d;
    for (Strategy strategy : {Strategy::amg, Strategy::gmg}) {
        for (SmootherKind kind : {SmootherKind::block_jacobi, SmootherKind::sor_chebyshev, SmootherKind::sor_gmres}) {
            OptimizationConfig cfg;
            cfg.problem = ProblemKind::cantilever2d;
            cfg.resolution = {96, 48};
            cfg.preconditioner.strategy = strategy;
            cfg.preconditioner.smoother.kind = kind;
            const Stopwatch clock;
            const OptimizationResult r = run_optimization(cfg);
            const std::string name = to_string(strategy) + "_" + to_string(kind);
            std::filesystem::create_directories(dir / name);
            csvs.push_back(dir / name / "history.csv");
            write_history_csv(csvs.back(), r.history);
            int total = 0, unconverged = 0;
            for (const auto& s : r.history) {
                total += s.solve_iters;
                unconverged += s.solve_converged ? 0 : 1;
            }
            complete = complete && r.history.size() == expected;
            d << name << ": " << total << " iters, " << unconverged << " unconverged, "
              << fmt("%.0f", clock.seconds()) << "s; ";
            runs[{strategy, kind}] = r.history;
        }
    }
    const Report report = compare_report(csvs);
    {
        std::ofstream out(dir / "report.csv");
        print_report(report, out);
    }
    complete = complete && report.rows.size() == csvs.size() - 1;
    d << "report rows=" << report.rows.size() << "; tracked (expectation >= 70%, non-blocking):";
    for (Strategy strategy : {Strategy::amg, Strategy::gmg}) {
        const auto& jac = runs[{strategy, SmootherKind::block_jacobi}];
        const auto& gm = runs[{strategy, SmootherKind::sor_gmres}];
        const std::size_t n = std::min(jac.size(), gm.size());
        std::size_t fewer = 0;
        for (std::size_t i = 0; i < n; ++i) fewer += gm[i].solve_iters <= jac[i].solve_iters ? 1 : 0;
        const double share = n ? double(fewer) / n : 0.0;
        d << ' ' << to_string(strategy) << " gmres <= jacobi on " << fmt("%.1f", 100 * share) << "% of steps ("
          << (share >= 0.7 ? "met" : "not met") << ")";
    }
    return {complete, d.str()};
}

struct Entry {
    int id;
    const char* name;
    Outcome (*run)();
};

constexpr Entry kCriteria[] = {
    {1, "linear solves match dense oracle", linear_solves},
    {2, "Davidson matches dense eigen oracle", eigensolves},
    {3, "sensitivities match finite differences", gradient_checks},
    {4, "multigrid invariants", multigrid_invariants},
    {5, "AMG iterations insensitive to coarse bound", coarse_bound_robustness},
    {6, "grid diagnostic corner ratios", grid_diagnostic},
    {7, "adaptive hybrid controller", controller},
    {8, "hybrid between GMG setup and AMG iterations", hybrid_sandwich},
    {9, "end-to-end 96x48 cantilever", end_to_end},
    {10, "smoother study harness", smoother_study},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    bool failed = false;
    for (const Entry& e : kCriteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), e.id) == selected.end()) continue;
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        std::cout << "criterion " << e.id << " (" << e.name << "): " << (o.pass ? "PASS" : "FAIL")
                  << (o.blocking ? "" : " [non-blocking]") << " -- " << o.detail << std::endl;
        failed = failed || (!o.pass && o.blocking);
    }
    return failed ? 1 : 0;
}
