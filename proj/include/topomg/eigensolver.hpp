#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "topomg/krylov.hpp"
#include "topomg/sparse_matrix.hpp"

namespace topomg {

struct DavidsonConfig {
    int j_min = 10;
    int j_max = 25;
    int n_modes = 6;
    double rtol_residual = 1e-6;
    double rtol_eigenvalue_stall = 1e-13;
    int max_iterations = 2000;
    std::uint64_t seed = 2024;

    void validate() const;
};

struct EigenResult {
    std::vector<double> eigenvalues;    // descending
    std::vector<Vector> eigenvectors;   // B-orthonormal
    std::vector<bool> converged;        // per returned mode
    std::vector<double> residuals;      // ||A x - l B x|| / ||A x||
    int iterations = 0;
    int converged_count = 0;
    double solve_time = 0.0;
};

/// Largest eigenpairs of A x = l B x (A symmetric, B SPD) by generalized
/// Davidson with locking. `m` approximates B^-1; `initial_space` seeds the basis.
[[nodiscard]] EigenResult generalized_davidson(const LinearOperator& a, const LinearOperator& b,
                                               const LinearOperator& m, Index n, const DavidsonConfig& cfg,
                                               const std::vector<Vector>& initial_space = {});
[[nodiscard]] EigenResult generalized_davidson(const SparseMatrix& a, const SparseMatrix& b, const LinearOperator& m,
                                               const DavidsonConfig& cfg,
                                               const std::vector<Vector>& initial_space = {});

struct RitzPairs {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd coeffs;   // columns y_i with V y_i the Ritz vectors
    Eigen::MatrixXd vectors;  // V y_i
};

/// Solves (V^T A V) y = t (V^T B V) y. `av` and `bv` are A V and B V.
[[nodiscard]] RitzPairs rayleigh_ritz(const Eigen::MatrixXd& v, const Eigen::MatrixXd& av, const Eigen::MatrixXd& bv);
[[nodiscard]] RitzPairs rayleigh_ritz(const LinearOperator& a, const LinearOperator& b, const Eigen::MatrixXd& v);

struct OrthoResult {
    Eigen::VectorXd z;   // unit B-norm
    Eigen::VectorXd bz;  // B z
};

/// Two-pass modified Gram-Schmidt of z against the B-orthonormal columns of V
/// (with BV = B V). Returns nullopt when z is (numerically) inside span(V).
/// Throws if z^T B z < 0.
[[nodiscard]] std::optional<OrthoResult> b_orthonormalize(const Eigen::MatrixXd& v, const Eigen::MatrixXd& bv,
                                                          Eigen::VectorXd z, const LinearOperator& b);

}  // namespace topomg
