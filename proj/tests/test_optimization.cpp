#include <numeric>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "topomg/optimization.hpp"

using namespace topomg;
using topomg::test::to_eigen;

namespace {

LinearOperator dense_inverse(const SparseMatrix& k) {
    auto ldlt = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(k.to_dense());
    return [ldlt](std::span<const double> in, std::span<double> out) {
        const Eigen::VectorXd y = ldlt->solve(Eigen::Map<const Eigen::VectorXd>(in.data(), in.size()));
        std::copy(y.data(), y.data() + y.size(), out.begin());
    };
}

double compliance_of(const Problem& pb, const FilterOperator& f, const SimpLaw& law, const Vector& alpha) {
    const Vector rho = f.apply(alpha);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho));
    const Vector u = test::dense_solve(k, pb.bc.load);
    return dot(pb.bc.load, u);
}

std::vector<double> top_eigenvalues(const Problem& pb, const ElementKernel& kernel, const FilterOperator& f,
                                    const SimpLaw& law, const StressSimpLaw& sl, const Vector& alpha, int count) {
    const Vector rho = f.apply(alpha);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel);
    const Vector u = test::dense_solve(k, pb.bc.load);
    const SparseMatrix ks = assemble_stress_stiffness(pb.mesh, pb.bc, u, element_sigma_moduli(sl, rho), kernel);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(ks.to_dense(), k.to_dense());
    std::vector<double> out;
    const auto n = ges.eigenvalues().size();
    for (int i = 0; i < count; ++i) out.push_back(ges.eigenvalues()(n - 1 - i));
    return out;
}

}  // namespace

// Problems ----------------------------------------------------------------------

TEST(Problems, LoadsTotalOneAndDefaults) {
    for (ProblemKind kind : {ProblemKind::cantilever2d, ProblemKind::column_stability, ProblemKind::grid_diagnostic,
                             ProblemKind::cantilever3d}) {
        const auto dims = kind == ProblemKind::cantilever3d ? std::vector<Index>{6, 3, 3} : std::vector<Index>{8, 4};
        const Problem pb = make_problem(kind, dims);
        const double total = std::accumulate(pb.bc.load.begin(), pb.bc.load.end(), 0.0);
        EXPECT_NEAR(total, -1.0, 1e-14) << to_string(kind);
        EXPECT_FALSE(pb.bc.fixed_dofs.empty());
    }
    EXPECT_EQ(default_volume_fraction(ProblemKind::cantilever2d), 0.4);
    EXPECT_EQ(default_volume_fraction(ProblemKind::column_stability), 0.4);
    EXPECT_EQ(default_volume_fraction(ProblemKind::cantilever3d), 0.12);
    EXPECT_EQ(problem_kind_from_string("cantilever3d"), ProblemKind::cantilever3d);
    EXPECT_THROW((void)problem_kind_from_string("bridge"), std::invalid_argument);
}

// Compliance ----------------------------------------------------------------------

TEST(Compliance, SensitivitiesNonpositive) {
    const Problem pb = make_problem(ProblemKind::cantilever2d, {12, 6});
    const ElementKernel kernel(pb.mesh, 0.3);
    const auto f = build_filter(pb.mesh, 1.5);
    const SimpLaw law = SimpLaw::with_penalty(3.0);
    const Vector rho = f.apply(test::random_vector(72, 1, 0.1, 1.0));
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel);
    const Vector u = test::dense_solve(k, pb.bc.load);
    const Evaluation ev = compliance_and_sensitivity(pb.mesh, kernel, f, law, rho, pb.bc.load, u);
    for (double g : ev.d_rho) EXPECT_LE(g, 0.0);
    for (double g : ev.d_alpha) EXPECT_LE(g, 0.0);
}

TEST(Compliance, MirrorSymmetry) {
    // Column with centred load and uniform density is symmetric about x = nx/2.
    const Problem pb = make_problem(ProblemKind::column_stability, {8, 10});
    const ElementKernel kernel(pb.mesh, 0.3);
    const auto f = build_filter(pb.mesh, 1.5);
    const SimpLaw law = SimpLaw::with_penalty(3.0);
    const Vector rho(80, 0.5);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel);
    const Vector u = test::dense_solve(k, pb.bc.load);
    const Evaluation ev = compliance_and_sensitivity(pb.mesh, kernel, f, law, rho, pb.bc.load, u);
    const double scale = to_eigen(ev.d_rho).cwiseAbs().maxCoeff();
    for (Index j = 0; j < 10; ++j) {
        for (Index i = 0; i < 4; ++i) {
            EXPECT_NEAR(ev.d_rho[pb.mesh.element_index(i, j)], ev.d_rho[pb.mesh.element_index(7 - i, j)], 1e-8 * scale);
        }
    }
}

TEST(Compliance, FiniteDifference) {
    const Problem pb = make_problem(ProblemKind::cantilever2d, {8, 4});
    const ElementKernel kernel(pb.mesh, 0.3);
    const auto f = build_filter(pb.mesh, 1.5);
    const SimpLaw law = SimpLaw::with_penalty(3.0);
    const Vector alpha = test::random_vector(32, 7, 0.2, 1.0);
    const Vector rho = f.apply(alpha);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel);
    const Vector u = test::dense_solve(k, pb.bc.load);
    const Evaluation ev = compliance_and_sensitivity(pb.mesh, kernel, f, law, rho, pb.bc.load, u);
    EXPECT_NEAR(ev.objective, compliance_of(pb, f, law, alpha), 1e-12 * ev.objective);
    const double h = 1e-6;
    for (Index e = 0; e < 32; ++e) {
        Vector ap = alpha, am = alpha;
        ap[e] += h;
        am[e] -= h;
        const double fd = (compliance_of(pb, f, law, ap) - compliance_of(pb, f, law, am)) / (2 * h);
        EXPECT_NEAR(ev.d_alpha[e], fd, 1e-4 * std::abs(fd)) << "element " << e;
    }
}

// Stability -----------------------------------------------------------------------

TEST(PNorm, ConstantAndDominant) {
    const std::vector<double> same(6, 3.0);
    EXPECT_NEAR(pnorm_aggregate(same), std::pow(6.0, 1.0 / 8.0) * 3.0, 1e-13);
    const std::vector<double> dom{10.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    EXPECT_NEAR(pnorm_aggregate(dom), 10.0, 0.1);
    const std::vector<double> l{4.0, 3.5, 2.0};
    const Vector w = pnorm_weights(l);
    for (std::size_t i = 0; i < l.size(); ++i) {
        std::vector<double> lp = l, lm = l;
        lp[i] += 1e-6;
        lm[i] -= 1e-6;
        EXPECT_NEAR(w[i], (pnorm_aggregate(lp) - pnorm_aggregate(lm)) / 2e-6, 1e-8);
    }
}

TEST(AdjointRhs, ZeroAndQuadratic) {
    const Problem pb = make_problem(ProblemKind::column_stability, {4, 6});
    const ElementKernel kernel(pb.mesh, 0.3);
    const Vector es(24, 0.8);
    for (double v : adjoint_rhs(pb.mesh, kernel, pb.bc, Vector(pb.mesh.dof_count(), 0.0), es)) EXPECT_EQ(v, 0.0);
    const Vector phi = test::random_vector(pb.mesh.dof_count(), 3);
    Vector phi2 = phi;
    for (auto& x : phi2) x *= 2.0;
    const Eigen::VectorXd r1 = to_eigen(adjoint_rhs(pb.mesh, kernel, pb.bc, phi, es));
    const Eigen::VectorXd r2 = to_eigen(adjoint_rhs(pb.mesh, kernel, pb.bc, phi2, es));
    EXPECT_LE((r2 - 4.0 * r1).cwiseAbs().maxCoeff(), 1e-12 * r1.cwiseAbs().maxCoeff());
}

TEST(AdjointRhs, SingleElementMatchesFiniteDifference) {
    StructuredMesh m({1, 1}, {1, 1});
    BoundaryConditions bc;
    bc.load.assign(8, 0.0);
    const ElementKernel kernel(m, 0.3);
    const Vector phi = test::random_vector(8, 21), u = test::random_vector(8, 22);
    const Vector es{1.7};
    const Vector rhs = adjoint_rhs(m, kernel, bc, phi, es);
    std::vector<Index> dofs(8);
    m.element_dofs(0, dofs);
    auto local = [&](const Vector& x) {
        Vector out(8);
        for (int i = 0; i < 8; ++i) out[i] = x[dofs[i]];
        return out;
    };
    const Eigen::VectorXd p = to_eigen(local(phi));
    const double h = 1e-6;
    for (int j = 0; j < 8; ++j) {
        Vector up = u, um = u;
        up[j] += h;
        um[j] -= h;
        const double fd = (p.dot(kernel.stress_stiffness(local(up), 1.7) * p) -
                           p.dot(kernel.stress_stiffness(local(um), 1.7) * p)) /
                          (2 * h);
        EXPECT_NEAR(rhs[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Stability, FiniteDifference) {
    const Problem pb = make_problem(ProblemKind::column_stability, {8, 16});
    const ElementKernel kernel(pb.mesh, 0.3);
    const auto f = build_filter(pb.mesh, 1.5);
    const double p = 3.0;
    const SimpLaw law = SimpLaw::with_penalty(p);
    const StressSimpLaw sl{1.0, p, 0.1};
    const Vector alpha = test::random_vector(128, 31, 0.4, 1.0);
    const Vector rho = f.apply(alpha);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(law, rho), kernel);
    const Vector u = test::dense_solve(k, pb.bc.load);

    const auto base = top_eigenvalues(pb, kernel, f, law, sl, alpha, 7);
    ASSERT_GT((base[5] - base[6]) / base[0], 1e-3) << "sixth and seventh eigenvalues not separated";

    DavidsonConfig cfg;
    cfg.rtol_residual = 1e-10;
    const LinearOperator kinv = dense_inverse(k);
    const AdjointSolver adj = [&kinv](std::span<const double> rhs) {
        Vector v(rhs.size());
        kinv(rhs, v);
        return std::make_pair(v, SolveRecord{});
    };
    const StabilityEvaluation se =
        stability_objective_and_sensitivity(pb.mesh, kernel, pb.bc, f, law, sl, rho, u, k, kinv, adj, cfg, {});
    ASSERT_EQ(se.converged_modes, 6);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(se.eigenvalues[i], base[i], 1e-8 * base[0]);

    const auto objective = [&](const Vector& a) {
        return pnorm_aggregate(top_eigenvalues(pb, kernel, f, law, sl, a, 6));
    };
    EXPECT_NEAR(se.eval.objective, objective(alpha), 1e-8 * se.eval.objective);
    const double h = 1e-5;
    Eigen::VectorXd fd(128);
    for (Index e = 0; e < 128; ++e) {
        Vector ap = alpha, am = alpha;
        ap[e] += h;
        am[e] -= h;
        fd(e) = (objective(ap) - objective(am)) / (2 * h);
    }
    const Eigen::VectorXd g = to_eigen(se.eval.d_alpha);
    EXPECT_LE((g - fd).norm() / fd.norm(), 1e-3);
    for (Index e = 0; e < 128; ++e) EXPECT_NEAR(g(e), fd(e), 1e-3 * fd.cwiseAbs().maxCoeff()) << "element " << e;
}

// MMA ----------------------------------------------------------------------------

TEST(Mma, ZeroGradientInactiveConstraintKeepsDesign) {
    MmaState st;
    const Vector x{0.3, 0.5, 0.7, 0.2};
    const Vector a(4, 0.25);
    const Vector xn = mma_update(st, MmaSettings{}, x, Vector(4, 0.0), a, 0.9);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(xn[i], x[i], 1e-10);
}

TEST(Mma, ActiveVolumeConstraintSatisfied) {
    MmaState st;
    Vector x(50, 0.3);
    const Vector a(50, 1.0 / 50);
    for (int it = 0; it < 3; ++it) {
        x = mma_update(st, MmaSettings{}, x, Vector(50, -1.0), a, 0.4);
        const double vol = dot(a, x);
        EXPECT_NEAR(vol, 0.4, 1e-6 * 0.4);
        for (double v : x) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Mma, MoveLimitRespected) {
    MmaState st;
    const Vector x(10, 0.5);
    MmaSettings s;
    s.move = 0.05;
    const Vector xn = mma_update(st, s, x, test::random_vector(10, 3), Vector(10, 0.01), 10.0);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(xn[i] - x[i]), 0.05 + 1e-15);
}

TEST(Mma, SubproblemMatchesBruteForceScan) {
    MmaSubproblem sp;
    sp.p = {0.3, 0.05};
    sp.q = {0.02, 0.4};
    sp.lower = {-0.5, -0.4};
    sp.upper = {1.5, 1.6};
    sp.lo = {0.0, 0.0};
    sp.hi = {1.0, 1.0};
    sp.a = {1.0, 2.0};
    sp.b = 1.2;
    const auto sol = solve_mma_subproblem(sp);
    const auto obj = [&](double x0, double x1) {
        return sp.p[0] / (sp.upper[0] - x0) + sp.q[0] / (x0 - sp.lower[0]) + sp.p[1] / (sp.upper[1] - x1) +
               sp.q[1] / (x1 - sp.lower[1]);
    };
    double best = 1e300, bx = 0, by = 0;
    const int n = 1000;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const double x0 = double(i) / n, x1 = double(j) / n;
            if (sp.a[0] * x0 + sp.a[1] * x1 > sp.b) continue;
            const double v = obj(x0, x1);
            if (v < best) {
                best = v;
                bx = x0;
                by = x1;
            }
        }
    }
    EXPECT_NEAR(sol.x[0], bx, 1e-3);
    EXPECT_NEAR(sol.x[1], by, 1e-3);
    EXPECT_LE(sp.a[0] * sol.x[0] + sp.a[1] * sol.x[1], sp.b * (1 + 1e-9));
    EXPECT_GT(sol.lambda, 0.0);
}

// Loop -----------------------------------------------------------------------------

TEST(Optimization, SingleStepObjectiveIsCompliance) {
    OptimizationConfig cfg;
    cfg.problem = ProblemKind::cantilever2d;
    cfg.resolution = {24, 12};
    cfg.max_steps = 1;
    const OptimizationResult r = run_optimization(cfg);
    ASSERT_EQ(r.history.size(), 1u);
    const Problem& pb = r.problem;
    const Vector rho(288, 0.4);
    const SparseMatrix k = assemble_stiffness(pb.mesh, pb.bc, element_moduli(SimpLaw::with_penalty(1.0), rho));
    const double c = dot(pb.bc.load, test::dense_solve(k, pb.bc.load));
    EXPECT_NEAR(r.history[0].objective, c, 10 * cfg.solver.rtol * c);
    EXPECT_NEAR(r.history[0].volume, 0.4, 1e-12);
    EXPECT_TRUE(r.history[0].solve_converged);
}

TEST(Optimization, ShortRunKeepsVolumeAndIsDeterministic) {
    OptimizationConfig cfg;
    cfg.resolution = {32, 16};
    cfg.max_steps = 25;
    cfg.preconditioner.strategy = Strategy::hybrid_adaptive;
    const OptimizationResult a = run_optimization(cfg);
    const OptimizationResult b = run_optimization(cfg);
    ASSERT_EQ(a.history.size(), 25u);
    EXPECT_NEAR(a.history.back().volume, 0.4, 1e-3);
    EXPECT_LT(a.history.back().objective, a.history.front().objective);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        EXPECT_EQ(a.history[i].objective, b.history[i].objective);
        EXPECT_EQ(a.history[i].solve_iters, b.history[i].solve_iters);
        const double c = a.history[i].compliance;
        EXPECT_NEAR(a.history[i].energy, c, 2 * cfg.solver.rtol * c);
    }
}

TEST(Optimization, ColumnFewSteps) {
    OptimizationConfig cfg;
    cfg.problem = ProblemKind::column_stability;
    cfg.resolution = {16, 32};
    cfg.schedule = PenaltySchedule{1.0, 4.0, 0.125, 30, PenaltySchedule::Extension{}};
    cfg.max_steps = 3;
    const OptimizationResult r = run_optimization(cfg);
    ASSERT_EQ(r.history.size(), 3u);
    for (const auto& s : r.history) {
        EXPECT_EQ(s.eigenvalues.size(), 6u);
        EXPECT_TRUE(s.eig_iters.has_value());
        EXPECT_TRUE(s.adjoint_iters.has_value());
        EXPECT_GT(s.objective, 0.0);
    }
}

TEST(Optimization, GridIsNotAnOptimization) {
    OptimizationConfig cfg;
    cfg.problem = ProblemKind::grid_diagnostic;
    EXPECT_THROW((void)run_optimization(cfg), std::invalid_argument);
}
