#include <cmath>
#include <stdexcept>

#include "topomg/optimization.hpp"

namespace topomg {

void OptimizationConfig::validate() const {
    schedule.validate();
    preconditioner.validate();
    solver.validate();
    if (problem == ProblemKind::column_stability) eigen.validate();
    if (!resolution.empty() && resolution.size() != default_resolution(problem).size()) {
        throw std::invalid_argument("optimization: resolution has the wrong number of dimensions");
    }
    for (Index d : resolution) {
        if (d < 1) throw std::invalid_argument("optimization: resolution entries must be >= 1");
    }
    if (volume_fraction && !(*volume_fraction > 0.0 && *volume_fraction <= 1.0)) {
        throw std::invalid_argument("optimization: volume_fraction must be in (0, 1]");
    }
    if (!(filter_radius > 0.0)) throw std::invalid_argument("optimization: filter_radius must be > 0");
    if (!(nu > -1.0 && nu < 0.5)) throw std::invalid_argument("optimization: nu must be in (-1, 0.5)");
    if (shadow_every < 1) throw std::invalid_argument("optimization: shadow_every must be >= 1");
    for (const auto& [label, pc] : shadow_preconditioners) pc.validate();
}

OptimizationResult run_optimization(const OptimizationConfig& cfg, const std::function<void(const StepRecord&)>& on_step) {
    cfg.validate();
    if (cfg.problem == ProblemKind::grid_diagnostic) {
        throw std::invalid_argument("optimization: the grid diagnostic is a single solve, not an optimization");
    }
    OptimizationResult res;
    res.problem = make_problem(cfg.problem, cfg.resolution.empty() ? default_resolution(cfg.problem) : cfg.resolution);
    const Problem& pb = res.problem;
    const StructuredMesh& mesh = pb.mesh;
    const double vf = cfg.volume_fraction.value_or(default_volume_fraction(cfg.problem));

    const ElementKernel kernel(mesh, cfg.nu);
    const FilterOperator filter = build_filter(mesh, cfg.filter_radius);
    const Index ne = mesh.element_count();
    const Vector unit_volume(ne, 1.0 / static_cast<double>(ne));
    const Vector constraint = filter.apply_transpose(unit_volume);
    const Eigen::MatrixXd nns = nullspace_matrix(rigid_body_modes(mesh, pb.bc.fixed_dofs));

    std::vector<double> penalties = penalty_per_step(cfg.schedule);
    if (cfg.max_steps >= 0 && static_cast<std::size_t>(cfg.max_steps) < penalties.size()) {
        penalties.resize(cfg.max_steps);
    }

    res.alpha.assign(ne, vf);
    Vector u(mesh.dof_count(), 0.0);
    std::vector<Vector> eig_seed;
    MmaState mma;
    std::optional<AdaptiveHybridController> controller;
    if (cfg.preconditioner.strategy == Strategy::hybrid_adaptive) controller.emplace(cfg.preconditioner.n_geo);
    double objective_scale = 0.0;
    PreconditionerConfig pcfg = cfg.preconditioner;
    pcfg.seed = cfg.seed;
    DavidsonConfig eig_cfg = cfg.eigen;
    eig_cfg.seed = cfg.seed;

    for (std::size_t step = 0; step < penalties.size(); ++step) {
        const int si = static_cast<int>(step);
        try {
            const double p = penalties[step];
            res.rho = filter.apply(res.alpha);
            const SimpLaw law = SimpLaw::with_penalty(p);
            const StressSimpLaw sigma_law{1.0, p, 0.1};
            const Vector moduli = element_moduli(law, res.rho);
            auto k = std::make_shared<const SparseMatrix>(assemble_stiffness(mesh, pb.bc, moduli, kernel));

            StepRecord rec;
            rec.step = si;
            rec.penalty = p;
            rec.strategy = to_string(cfg.preconditioner.strategy);
            const std::optional<int> n_geo =
                controller ? std::optional<int>(controller->n_geo()) : std::optional<int>();
            const MgHierarchy h = build_preconditioner(pcfg, mesh, k, nns, n_geo);
            rec.levels = static_cast<int>(h.level_count());
            rec.n_geo = h.geometric_transfers();
            rec.setup_s = h.setup_seconds;

            if (step % static_cast<std::size_t>(cfg.shadow_every) == 0) {
                for (const auto& [label, shadow_cfg] : cfg.shadow_preconditioners) {
                    PreconditionerConfig pc = shadow_cfg;
                    pc.seed = cfg.seed;
                    const MgHierarchy sh = build_preconditioner(pc, mesh, k, nns);
                    auto [us, srec] = preconditioned_solve(*k, pb.bc.load, u, sh, cfg.solver);
                    res.shadow.push_back({si, label, to_string(pc.strategy), static_cast<int>(sh.level_count()),
                                          sh.setup_seconds, srec.solve_time, srec.iterations, srec.converged});
                }
            }

            auto [un, srec] = preconditioned_solve(*k, pb.bc.load, u, h, cfg.solver);
            for (double v : un) {
                if (!std::isfinite(v)) throw std::runtime_error("displacement solve produced non-finite values");
            }
            u = std::move(un);
            rec.solve_s = srec.solve_time;
            rec.solve_iters = srec.iterations;
            rec.solve_converged = srec.converged;
            rec.compliance = dot(pb.bc.load, u);
            rec.energy = dot(u, k->multiply(u));

            Evaluation ev;
            if (pb.stability()) {
                const AdjointSolver adjoint = [&](std::span<const double> rhs) {
                    const Vector zero(rhs.size(), 0.0);
                    return preconditioned_solve(*k, rhs, zero, h, cfg.solver);
                };
                const StabilityEvaluation st = stability_objective_and_sensitivity(
                    mesh, kernel, pb.bc, filter, law, sigma_law, res.rho, u, *k, as_preconditioner(h), adjoint,
                    eig_cfg, eig_seed);
                eig_seed = st.eigenvectors;
                rec.eig_s = st.eig_seconds;
                rec.eig_iters = st.eig_iterations;
                rec.adjoint_s = st.adjoint_seconds;
                rec.adjoint_iters = st.adjoint_iterations;
                rec.eigenvalues = st.eigenvalues;
                ev = st.eval;
            } else {
                ev = compliance_and_sensitivity(mesh, kernel, filter, law, res.rho, pb.bc.load, u);
            }
            rec.objective = ev.objective;
            rec.volume = dot(unit_volume, res.rho);

            if (objective_scale == 0.0) objective_scale = std::abs(ev.objective) > 0.0 ? std::abs(ev.objective) : 1.0;
            Vector df = ev.d_alpha;
            scale(df, 1.0 / objective_scale);
            res.alpha = mma_update(mma, cfg.mma, res.alpha, df, constraint, vf);

            if (controller) controller->adapt_after_solve(srec.iterations);
            res.hierarchy_summary = h.summary();
            res.history.push_back(rec);
            if (on_step) on_step(res.history.back());
        } catch (const OptimizationError&) {
            throw;
        } catch (const std::exception& e) {
            throw OptimizationError(si, e.what());
        }
    }
    res.rho = filter.apply(res.alpha);
    return res;
}

}  // namespace topomg
