#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "topomg/eigensolver.hpp"
#include "topomg/fem.hpp"
#include "topomg/krylov.hpp"
#include "topomg/material.hpp"
#include "topomg/mesh.hpp"
#include "topomg/multigrid.hpp"

namespace topomg {

// Problems ------------------------------------------------------------------

enum class ProblemKind { cantilever2d, column_stability, grid_diagnostic, cantilever3d };

[[nodiscard]] std::string to_string(ProblemKind kind);
[[nodiscard]] ProblemKind problem_kind_from_string(const std::string& name);
[[nodiscard]] std::vector<Index> default_resolution(ProblemKind kind);
[[nodiscard]] double default_volume_fraction(ProblemKind kind);
[[nodiscard]] double default_solver_rtol(ProblemKind kind);

struct Problem {
    ProblemKind kind = ProblemKind::cantilever2d;
    StructuredMesh mesh;
    BoundaryConditions bc;

    [[nodiscard]] bool stability() const { return kind == ProblemKind::column_stability; }
};

/// Mesh and boundary conditions. The shorter axis has unit length and the
/// load has unit total magnitude.
///  cantilever2d: left edge clamped, downward point load mid right edge.
///  column_stability: bottom clamped, downward point load mid top edge.
///  grid_diagnostic: bottom clamped, uniform downward load along the top.
///  cantilever3d: x = 0 face clamped, downward load spread along the bottom
///  edge of the x = L face.
[[nodiscard]] Problem make_problem(ProblemKind kind, const std::vector<Index>& dims);

// Preconditioners -----------------------------------------------------------

enum class Strategy { gmg, amg, hybrid, hybrid_adaptive };

[[nodiscard]] std::string to_string(Strategy s);
[[nodiscard]] Strategy strategy_from_string(const std::string& name);

struct PreconditionerConfig {
    Strategy strategy = Strategy::gmg;
    Index coarse_max_dofs = 150;
    int n_geo = 2;
    int max_levels = 30;
    int n_pre = 1;
    int n_post = 1;
    SmootherConfig smoother;
    std::uint64_t seed = 12345;

    void validate() const;
};

/// Builds the hierarchy for K. `n_geo` overrides the configured value (used
/// by the adaptive controller).
[[nodiscard]] MgHierarchy build_preconditioner(const PreconditionerConfig& cfg, const StructuredMesh& mesh,
                                               std::shared_ptr<const SparseMatrix> k,
                                               const Eigen::MatrixXd& near_nullspace,
                                               std::optional<int> n_geo = std::nullopt);

[[nodiscard]] LinearOperator as_preconditioner(const MgHierarchy& h);

/// GMRES, or FGMRES when the hierarchy smoother is nonstationary.
[[nodiscard]] std::pair<Vector, SolveRecord> preconditioned_solve(const SparseMatrix& k, std::span<const double> b,
                                                                  std::span<const double> x0, const MgHierarchy& h,
                                                                  SolveConfig cfg);

// Sensitivities ---------------------------------------------------------------

struct Evaluation {
    double objective = 0.0;
    Vector d_rho;    // dF/drho
    Vector d_alpha;  // S^T dF/drho
};

/// Element moduli E(rho) for the given law.
[[nodiscard]] Vector element_moduli(const SimpLaw& law, std::span<const double> rho);
[[nodiscard]] Vector element_sigma_moduli(const StressSimpLaw& law, std::span<const double> rho);

/// F = f^T u with u already solved; dF/drho_e = -E'(rho_e) u_e^T k_e u_e.
[[nodiscard]] Evaluation compliance_and_sensitivity(const StructuredMesh& mesh, const ElementKernel& kernel,
                                                    const FilterOperator& filter, const SimpLaw& law,
                                                    std::span<const double> rho, std::span<const double> load,
                                                    std::span<const double> u);

/// Right-hand side of K v = Phi^T (dK_sigma/du) Phi, assembled element-wise.
[[nodiscard]] Vector adjoint_rhs(const StructuredMesh& mesh, const ElementKernel& kernel,
                                 const BoundaryConditions& bc, std::span<const double> phi,
                                 std::span<const double> sigma_moduli);

/// dlambda/drho_e for one K-normalized mode with adjoint solution v.
[[nodiscard]] Vector eigenvalue_sensitivity(const StructuredMesh& mesh, const ElementKernel& kernel,
                                            const SimpLaw& law, const StressSimpLaw& sigma_law,
                                            std::span<const double> rho, std::span<const double> u,
                                            std::span<const double> phi, double lambda, std::span<const double> v);

/// (sum lambda_i^p)^(1/p) and its derivative with respect to each lambda_i.
[[nodiscard]] double pnorm_aggregate(std::span<const double> lambdas, double p = 8.0);
[[nodiscard]] Vector pnorm_weights(std::span<const double> lambdas, double p = 8.0);

struct StabilityEvaluation {
    Evaluation eval;
    std::vector<double> eigenvalues;
    std::vector<Vector> eigenvectors;
    int converged_modes = 0;
    bool partial = false;
    int eig_iterations = 0;
    double eig_seconds = 0.0;
    int adjoint_iterations = 0;
    double adjoint_seconds = 0.0;
};

/// Linear solver for the adjoint systems K v = rhs (zero initial guess).
using AdjointSolver = std::function<std::pair<Vector, SolveRecord>(std::span<const double> rhs)>;

/// F = (sum lambda_i^8)^(1/8) over the converged modes of K_sigma phi = lambda K phi.
[[nodiscard]] StabilityEvaluation stability_objective_and_sensitivity(
    const StructuredMesh& mesh, const ElementKernel& kernel, const BoundaryConditions& bc,
    const FilterOperator& filter, const SimpLaw& law, const StressSimpLaw& sigma_law, std::span<const double> rho,
    std::span<const double> u, const SparseMatrix& k, const LinearOperator& eig_preconditioner,
    const AdjointSolver& adjoint_solver, const DavidsonConfig& eig_cfg, const std::vector<Vector>& initial_space);

// MMA -------------------------------------------------------------------------

struct MmaSettings {
    double move = 0.2;
    double asym_init = 0.5;
    double asym_increase = 1.2;
    double asym_decrease = 0.7;
    double asym_min = 0.01;
    double asym_max = 10.0;
    int dual_iterations = 100;
};

struct MmaState {
    Vector lower;
    Vector upper;
    Vector x_prev1;  // previous design
    Vector x_prev2;  // design before that
    int iteration = 0;
};

/// Separable subproblem: minimize sum_j p_j/(U_j - x_j) + q_j/(x_j - L_j)
/// subject to sum_j a_j x_j <= b and lo_j <= x_j <= hi_j (a_j >= 0).
struct MmaSubproblem {
    Vector p, q, lower, upper, lo, hi, a;
    double b = 0.0;
};

struct MmaSubproblemSolution {
    Vector x;
    double lambda = 0.0;
    int dual_iterations = 0;
};

[[nodiscard]] MmaSubproblemSolution solve_mma_subproblem(const MmaSubproblem& sp, int max_dual_iterations = 100);

/// One MMA step for min f(x) s.t. a^T x <= b, 0 <= x <= 1.
[[nodiscard]] Vector mma_update(MmaState& state, const MmaSettings& settings, std::span<const double> x,
                                std::span<const double> df, std::span<const double> a, double b);

// Optimization loop -----------------------------------------------------------

struct OptimizationConfig {
    ProblemKind problem = ProblemKind::cantilever2d;
    std::vector<Index> resolution;          // empty: problem default
    std::optional<double> volume_fraction;  // empty: problem default
    PenaltySchedule schedule;
    PreconditionerConfig preconditioner;
    SolveConfig solver;
    DavidsonConfig eigen;
    MmaSettings mma;
    double filter_radius = 1.5;
    double nu = 0.3;
    std::uint64_t seed = 12345;
    int max_steps = -1;  // truncate the schedule when >= 0

    /// Extra hierarchies evaluated on each step's system without affecting
    /// the design trajectory (benchmark comparisons).
    std::vector<std::pair<std::string, PreconditionerConfig>> shadow_preconditioners;
    int shadow_every = 1;

    void validate() const;
};

struct StepRecord {
    int step = 0;
    double penalty = 0.0;
    std::string strategy;
    int levels = 0;
    int n_geo = 0;
    double setup_s = 0.0;
    double solve_s = 0.0;
    int solve_iters = 0;
    bool solve_converged = false;
    std::optional<double> eig_s;
    std::optional<int> eig_iters;
    std::optional<double> adjoint_s;
    std::optional<int> adjoint_iters;
    double objective = 0.0;
    double volume = 0.0;
    double compliance = 0.0;  // f^T u
    double energy = 0.0;      // u^T K u
    std::vector<double> eigenvalues;
};

struct ShadowRecord {
    int step = 0;
    std::string label;
    std::string strategy;
    int levels = 0;
    double setup_s = 0.0;
    double solve_s = 0.0;
    int solve_iters = 0;
    bool converged = false;
};

struct OptimizationResult {
    Problem problem;
    std::vector<StepRecord> history;
    std::vector<ShadowRecord> shadow;
    Vector alpha;
    Vector rho;
    nlohmann::json hierarchy_summary;
};

/// Thrown when a step fails; carries the step index.
class OptimizationError : public std::runtime_error {
public:
    OptimizationError(int step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    [[nodiscard]] int step() const { return step_; }

private:
    int step_;
};

[[nodiscard]] OptimizationResult run_optimization(const OptimizationConfig& cfg,
                                                  const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace topomg
