#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topomg/sparse_matrix.hpp"

namespace topomg {

/// out = Op(in); sizes are the operator's.
using LinearOperator = std::function<void(std::span<const double> in, std::span<double> out)>;

enum class KrylovMethod { gmres, fgmres };

struct SolveConfig {
    KrylovMethod method = KrylovMethod::gmres;
    double rtol = 1e-7;
    int max_iterations = 1000;
    int restart = 200;

    void validate() const;
};

struct SolveRecord {
    int iterations = 0;
    double setup_time = 0.0;
    double solve_time = 0.0;
    std::vector<double> residual_history;  // ||b - A x_k||, estimates inside a cycle
    bool converged = false;
    bool breakdown = false;
    double initial_residual = 0.0;
    double final_residual = 0.0;  // explicitly recomputed at exit
};

[[nodiscard]] LinearOperator as_operator(const SparseMatrix& a);

/// Restarted GMRES, right preconditioned. M must be a fixed linear operator.
/// An empty M means no preconditioning.
[[nodiscard]] std::pair<Vector, SolveRecord> gmres_solve(const SparseMatrix& a, std::span<const double> b,
                                                         std::span<const double> x0, const LinearOperator& m,
                                                         const SolveConfig& cfg);

/// Flexible GMRES: stores the preconditioned directions, so M may vary per step.
[[nodiscard]] std::pair<Vector, SolveRecord> fgmres_solve(const SparseMatrix& a, std::span<const double> b,
                                                          std::span<const double> x0, const LinearOperator& m,
                                                          const SolveConfig& cfg);

/// Dispatch on cfg.method; A given as an operator.
[[nodiscard]] std::pair<Vector, SolveRecord> krylov_solve(const LinearOperator& a, std::span<const double> b,
                                                          std::span<const double> x0, const LinearOperator& m,
                                                          const SolveConfig& cfg);

}  // namespace topomg
