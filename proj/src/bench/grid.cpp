#include <stdexcept>

#include "topomg/bench.hpp"

namespace topomg {

void GridSpec::validate() const {
    if (domain < 1 || feature_width < 1) throw std::invalid_argument("grid: domain and feature width must be >= 1");
    if (feature_width > column_pitch || feature_width > beam_pitch) {
        throw std::invalid_argument("grid: feature width exceeds a pitch");
    }
    if (feature_width > domain) throw std::invalid_argument("grid: feature width exceeds the domain");
}

std::vector<Index> strip_starts(Index domain, Index width, Index pitch) {
    std::vector<Index> starts;
    for (Index s = 0; s < domain; s += pitch) starts.push_back(s);
    const Index last_end = std::min(domain, starts.back() + width);
    if (last_end < domain) starts.push_back(domain - width);
    return starts;
}

Vector generate_grid_structure(const GridSpec& spec, double void_density) {
    spec.validate();
    const Index n = spec.domain;
    std::vector<char> column(n, 0), beam(n, 0);
    for (Index s : strip_starts(n, spec.feature_width, spec.column_pitch)) {
        for (Index i = s; i < std::min(n, s + spec.feature_width); ++i) column[i] = 1;
    }
    for (Index s : strip_starts(n, spec.feature_width, spec.beam_pitch)) {
        for (Index j = s; j < std::min(n, s + spec.feature_width); ++j) beam[j] = 1;
    }
    Vector rho(static_cast<std::size_t>(n) * n, void_density);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            if (column[i] || beam[j]) rho[i + n * j] = 1.0;
        }
    }
    return rho;
}

GridPoint run_grid_point(const GridSpec& spec, const PreconditionerConfig& pc, const SolveConfig& solver,
                         double penalty, double void_density, double nu) {
    const Problem pb = make_problem(ProblemKind::grid_diagnostic, {spec.domain, spec.domain});
    const Vector rho = generate_grid_structure(spec, void_density);
    const Vector moduli = element_moduli(SimpLaw::with_penalty(penalty), rho);
    auto k = std::make_shared<const SparseMatrix>(assemble_stiffness(pb.mesh, pb.bc, moduli, nu));
    const Eigen::MatrixXd nns = nullspace_matrix(rigid_body_modes(pb.mesh, pb.bc.fixed_dofs));
    const MgHierarchy h = build_preconditioner(pc, pb.mesh, k, nns);
    const Vector x0(k->rows(), 0.0);
    auto [x, rec] = preconditioned_solve(*k, pb.bc.load, x0, h, solver);
    GridPoint gp;
    gp.pitch_x = spec.column_pitch;
    gp.pitch_y = spec.beam_pitch;
    gp.strategy = pc.strategy;
    gp.levels = static_cast<int>(h.level_count());
    gp.iterations = rec.iterations;
    gp.setup_s = h.setup_seconds;
    gp.solve_s = rec.solve_time;
    gp.converged = rec.converged;
    gp.hierarchy = h.summary();
    return gp;
}

std::vector<GridPoint> run_grid_sweep(const GridConfig& grid, const PreconditionerConfig& base,
                                      const SolveConfig& solver, std::uint64_t seed) {
    std::vector<GridPoint> out;
    for (Strategy s : grid.strategies) {
        PreconditionerConfig pc = base;
        pc.strategy = s;
        pc.seed = seed;
        for (Index px : grid.pitches) {
            for (Index py : grid.pitches) {
                const GridSpec spec{grid.domain, grid.feature_width, px, py};
                out.push_back(run_grid_point(spec, pc, solver, grid.penalty, grid.void_density));
            }
        }
    }
    return out;
}

}  // namespace topomg
