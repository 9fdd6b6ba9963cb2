#include <algorithm>
#include <stdexcept>

#include "topomg/optimization.hpp"

namespace topomg {

std::string to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::cantilever2d: return "cantilever2d";
        case ProblemKind::column_stability: return "column_stability";
        case ProblemKind::grid_diagnostic: return "grid_diagnostic";
        case ProblemKind::cantilever3d: return "cantilever3d";
    }
    return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& name) {
    if (name == "cantilever2d") return ProblemKind::cantilever2d;
    if (name == "column_stability" || name == "column") return ProblemKind::column_stability;
    if (name == "grid_diagnostic" || name == "grid") return ProblemKind::grid_diagnostic;
    if (name == "cantilever3d") return ProblemKind::cantilever3d;
    throw std::invalid_argument("unknown problem: " + name);
}

std::vector<Index> default_resolution(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::cantilever2d: return {96, 48};
        case ProblemKind::column_stability: return {64, 256};
        case ProblemKind::grid_diagnostic: return {264, 264};
        case ProblemKind::cantilever3d: return {48, 24, 24};
    }
    return {};
}

double default_volume_fraction(ProblemKind kind) { return kind == ProblemKind::cantilever3d ? 0.12 : 0.4; }

double default_solver_rtol(ProblemKind kind) {
    return kind == ProblemKind::cantilever2d || kind == ProblemKind::cantilever3d ? 1e-7 : 1e-8;
}

Problem make_problem(ProblemKind kind, const std::vector<Index>& dims) {
    const bool three_d = kind == ProblemKind::cantilever3d;
    if (dims.size() != (three_d ? 3u : 2u)) throw std::invalid_argument("make_problem: wrong number of dimensions");
    const Index shortest = *std::min_element(dims.begin(), dims.end());
    if (shortest < 1) throw std::invalid_argument("make_problem: dims must be >= 1");
    const double h = 1.0 / static_cast<double>(shortest);

    Problem pb;
    pb.kind = kind;
    pb.mesh = StructuredMesh(dims, std::vector<double>(dims.size(), h));
    const auto& m = pb.mesh;
    const int dpn = m.dofs_per_node();
    pb.bc.load.assign(m.dof_count(), 0.0);
    const Index nx = dims[0], ny = dims[1];

    const auto fix_node = [&](Index node) {
        for (int c = 0; c < dpn; ++c) pb.bc.fixed_dofs.push_back(node * dpn + c);
    };
    switch (kind) {
        case ProblemKind::cantilever2d:
            for (Index j = 0; j <= ny; ++j) fix_node(m.node_index(0, j));
            pb.bc.load[m.node_index(nx, ny / 2) * dpn + 1] = -1.0;
            break;
        case ProblemKind::column_stability:
            for (Index i = 0; i <= nx; ++i) fix_node(m.node_index(i, 0));
            pb.bc.load[m.node_index(nx / 2, ny) * dpn + 1] = -1.0;
            break;
        case ProblemKind::grid_diagnostic:
            for (Index i = 0; i <= nx; ++i) {
                fix_node(m.node_index(i, 0));
                // Consistent nodal loads of a uniform traction: end nodes get half.
                const double w = (i == 0 || i == nx) ? 0.5 : 1.0;
                pb.bc.load[m.node_index(i, ny) * dpn + 1] = -w / static_cast<double>(nx);
            }
            break;
        case ProblemKind::cantilever3d: {
            const Index nz = dims[2];
            for (Index k = 0; k <= nz; ++k) {
                for (Index j = 0; j <= ny; ++j) fix_node(m.node_index(0, j, k));
            }
            for (Index k = 0; k <= nz; ++k) {
                const double w = (k == 0 || k == nz) ? 0.5 : 1.0;
                pb.bc.load[m.node_index(nx, 0, k) * dpn + 1] = -w / static_cast<double>(nz);
            }
            break;
        }
    }
    pb.bc.finalize();
    return pb;
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::gmg: return "gmg";
        case Strategy::amg: return "amg";
        case Strategy::hybrid: return "hybrid";
        case Strategy::hybrid_adaptive: return "hybrid_adaptive";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "gmg") return Strategy::gmg;
    if (name == "amg") return Strategy::amg;
    if (name == "hybrid") return Strategy::hybrid;
    if (name == "hybrid_adaptive") return Strategy::hybrid_adaptive;
    throw std::invalid_argument("unknown strategy: " + name);
}

void PreconditionerConfig::validate() const {
    if (coarse_max_dofs < 1) throw std::invalid_argument("preconditioner: coarse_max_dofs must be >= 1");
    if (n_geo < 0) throw std::invalid_argument("preconditioner: n_geo must be >= 0");
    if (strategy == Strategy::hybrid_adaptive && n_geo < 2) {
        throw std::invalid_argument("preconditioner: adaptive hybrid needs n_geo >= 2");
    }
    if (max_levels < 1) throw std::invalid_argument("preconditioner: max_levels must be >= 1");
    if (n_pre < 0 || n_post < 0) throw std::invalid_argument("preconditioner: smoothing passes must be >= 0");
    smoother.validate();
}

MgHierarchy build_preconditioner(const PreconditionerConfig& cfg, const StructuredMesh& mesh,
                                 std::shared_ptr<const SparseMatrix> k, const Eigen::MatrixXd& near_nullspace,
                                 std::optional<int> n_geo) {
    cfg.validate();
    MgOptions opt;
    opt.coarse_max_dofs = cfg.coarse_max_dofs;
    opt.smoother = cfg.smoother;
    opt.smoother.block_size = mesh.dofs_per_node();
    opt.n_pre = cfg.n_pre;
    opt.n_post = cfg.n_post;
    opt.max_levels = cfg.max_levels;
    opt.seed = cfg.seed;
    switch (cfg.strategy) {
        case Strategy::gmg: return build_gmg(mesh, std::move(k), opt);
        case Strategy::amg: return build_sa_amg(std::move(k), near_nullspace, mesh.dofs_per_node(), opt);
        case Strategy::hybrid:
        case Strategy::hybrid_adaptive:
            return build_hybrid(mesh, std::move(k), near_nullspace, n_geo.value_or(cfg.n_geo), opt);
    }
    throw std::logic_error("unreachable strategy");
}

LinearOperator as_preconditioner(const MgHierarchy& h) {
    return [&h](std::span<const double> in, std::span<double> out) { h.apply(in, out); };
}

std::pair<Vector, SolveRecord> preconditioned_solve(const SparseMatrix& k, std::span<const double> b,
                                                    std::span<const double> x0, const MgHierarchy& h,
                                                    SolveConfig cfg) {
    const auto m = as_preconditioner(h);
    if (!h.stationary()) cfg.method = KrylovMethod::fgmres;
    return cfg.method == KrylovMethod::fgmres ? fgmres_solve(k, b, x0, m, cfg) : gmres_solve(k, b, x0, m, cfg);
}

}  // namespace topomg
