#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topomg/mesh.hpp"
#include "topomg/sparse_matrix.hpp"
#include "json.hpp"

namespace topomg {

enum class SmootherKind { weighted_jacobi, block_jacobi, sor_chebyshev, sor_gmres };

[[nodiscard]] std::string to_string(SmootherKind kind);
[[nodiscard]] SmootherKind smoother_kind_from_string(const std::string& name);

struct SmootherConfig {
    SmootherKind kind = SmootherKind::block_jacobi;
    double weight = 0.5;        // Jacobi damping
    int inner_iterations = 2;   // Chebyshev degree / GMRES steps
    int block_size = 2;         // dofs per node on the finest level
    int power_steps = 10;       // eigenvalue estimate for Chebyshev
    double chebyshev_lower = 0.1;
    double chebyshev_upper = 1.1;

    void validate() const;
    /// Chebyshev with fixed bounds and Jacobi variants are fixed linear maps.
    [[nodiscard]] bool stationary() const { return kind != SmootherKind::sor_gmres; }
};

enum class Provenance { geometric, algebraic };
[[nodiscard]] std::string to_string(Provenance p);

/// Level-local smoother state (inverted diagonals / blocks, Chebyshev bounds).
class Smoother {
public:
    Smoother() = default;
    Smoother(const SmootherConfig& config, const SparseMatrix& a, std::vector<Index> block_ptr, std::uint64_t seed);

    /// Apply `passes` smoothing passes to x for A x = b.
    void smooth(const SparseMatrix& a, std::span<double> x, std::span<const double> b, int passes) const;

    [[nodiscard]] const SmootherConfig& config() const { return config_; }
    [[nodiscard]] double chebyshev_lambda_max() const { return lambda_max_; }

    /// One symmetric Gauss-Seidel (SSOR, omega = 1) sweep from zero: z = M^-1 r.
    void ssor_apply(const SparseMatrix& a, std::span<const double> r, std::span<double> z) const;

private:
    void jacobi_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b, Vector& r) const;
    void block_jacobi_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b, Vector& r) const;
    void chebyshev_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b) const;
    void gmres_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b) const;

    SmootherConfig config_;
    std::vector<Index> block_ptr_;
    Vector inv_diag_;
    Vector diag_;
    std::vector<Eigen::MatrixXd> block_inv_;
    double lambda_max_ = 0.0;
};

/// Apply a smoother described by `config` to A x = b from scratch (setup + passes).
void smooth(const SmootherConfig& config, const SparseMatrix& a, std::span<double> x, std::span<const double> b,
            int passes);

struct MgLevel {
    std::shared_ptr<const SparseMatrix> op;
    SparseMatrix prolongation;  // empty on the coarsest level
    Provenance provenance = Provenance::geometric;
    std::vector<Index> block_ptr;  // node blocks (dof ranges)
    std::vector<Index> grid_dims;  // element counts, geometric levels only
    Smoother smoother;

    [[nodiscard]] Index size() const { return op->rows(); }
    [[nodiscard]] bool has_prolongation() const { return prolongation.rows() > 0; }
};

/// Direct factorization of the coarsest operator (sparse Cholesky, LU fallback).
class CoarseSolver {
public:
    CoarseSolver();
    ~CoarseSolver();
    CoarseSolver(CoarseSolver&&) noexcept;
    CoarseSolver& operator=(CoarseSolver&&) noexcept;

    void factorize(const SparseMatrix& a);
    void solve(std::span<const double> b, std::span<double> x) const;
    [[nodiscard]] bool uses_cholesky() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct MgOptions {
    Index coarse_max_dofs = 150;
    SmootherConfig smoother;
    int n_pre = 1;
    int n_post = 1;
    double strength_beta = 0.003;
    int max_levels = 30;
    std::uint64_t seed = 12345;
};

class MgHierarchy {
public:
    std::vector<MgLevel> levels;
    CoarseSolver coarse;
    MgOptions options;
    bool truncated = false;           // coarse bound not reached
    bool forced_aggregation = false;  // pairwise fallback used somewhere
    double setup_seconds = 0.0;

    [[nodiscard]] std::size_t level_count() const { return levels.size(); }
    [[nodiscard]] Index fine_size() const { return levels.front().size(); }
    [[nodiscard]] Index coarse_size() const { return levels.back().size(); }
    [[nodiscard]] int geometric_transfers() const;
    [[nodiscard]] std::vector<Provenance> provenance() const;

    /// V-cycle starting at level k with zero initial guess.
    [[nodiscard]] Vector vcycle(std::span<const double> b, std::size_t k = 0) const;
    void apply(std::span<const double> b, std::span<double> x) const;
    [[nodiscard]] bool stationary() const { return options.smoother.stationary(); }

    /// Per-level {size, nonzeros, provenance} plus build flags.
    [[nodiscard]] nlohmann::json summary() const;

    /// Factorize the coarsest operator and set up smoothers.
    void finalize();
};

// Geometric coarsening ------------------------------------------------------

/// Element counts per level for repeated halving (odd counts round up; the
/// last coarse element then spans one fine element) until dofs <= bound or an
/// axis reaches one element.
[[nodiscard]] std::vector<std::vector<Index>> plan_gmg_levels(const std::vector<Index>& dims, int dofs_per_node,
                                                              Index coarse_max_dofs, int max_levels = 30);

/// Shape-function prolongation from the coarse grid (halved dims) to `fine_dims`.
[[nodiscard]] SparseMatrix geometric_prolongation(const std::vector<Index>& fine_dims, int dofs_per_node);
[[nodiscard]] std::vector<Index> coarsen_dims(const std::vector<Index>& dims);
/// Values of fine nodal vectors at the coincident fine nodes of each coarse node.
[[nodiscard]] Eigen::MatrixXd inject_to_coarse(const std::vector<Index>& fine_dims, int dofs_per_node,
                                               const Eigen::MatrixXd& fine);

[[nodiscard]] MgHierarchy build_gmg(const StructuredMesh& mesh, std::shared_ptr<const SparseMatrix> k,
                                    const MgOptions& options);

// Smoothed aggregation --------------------------------------------------------

struct StrengthGraph {
    Index nodes = 0;
    std::vector<Index> ptr{0};
    std::vector<Index> adj;
    double beta = 0.0;

    [[nodiscard]] std::span<const Index> neighbours(Index i) const {
        return {adj.data() + ptr[i], static_cast<std::size_t>(ptr[i + 1] - ptr[i])};
    }
    [[nodiscard]] std::size_t edge_count() const { return adj.size(); }
};

[[nodiscard]] std::vector<Index> uniform_blocks(Index dofs, int block_size);

/// Block strength of connection: nodes i != j are strong iff
/// ||K_ij||_F^2 > beta ||K_ii||_F ||K_jj||_F.
[[nodiscard]] StrengthGraph strength_of_connection(const SparseMatrix& k, double beta,
                                                   std::span<const Index> block_ptr);
[[nodiscard]] StrengthGraph strength_of_connection(const SparseMatrix& k, double beta, int block_size);

struct Aggregation {
    std::vector<Index> aggregate_of;  // -1 for isolated (unaggregated) nodes
    Index count = 0;
    bool forced = false;
};

/// Greedy root-node aggregation in ascending node order (seed pass, absorption
/// of leftovers into neighbouring aggregates, then new aggregates from the rest).
[[nodiscard]] Aggregation aggregate(const StrengthGraph& graph);

struct TentativeProlongation {
    SparseMatrix p;
    Eigen::MatrixXd coarse_nullspace;
    std::vector<Index> coarse_block_ptr;
};

/// Per-aggregate orthonormalization of the near-nullspace rows; rank-deficient
/// columns within an aggregate are dropped.
[[nodiscard]] TentativeProlongation tentative_prolongation(const Aggregation& agg, std::span<const Index> block_ptr,
                                                           const Eigen::MatrixXd& nullspace);

/// Largest eigenvalue estimate of D^-1 A (power iteration in the D inner product).
[[nodiscard]] double estimate_dinv_a_radius(const SparseMatrix& a, int steps, std::uint64_t seed);

/// P = (I - 4/(3 rho) D^-1 A) P_tent
[[nodiscard]] SparseMatrix smooth_prolongation(const SparseMatrix& a, const SparseMatrix& p_tent,
                                               std::uint64_t seed);

[[nodiscard]] Eigen::MatrixXd nullspace_matrix(const std::vector<Vector>& modes);

[[nodiscard]] MgHierarchy build_sa_amg(std::shared_ptr<const SparseMatrix> k, const Eigen::MatrixXd& near_nullspace,
                                       int block_size, const MgOptions& options);

/// n_geo geometric transfers on the finest levels, algebraic below.
[[nodiscard]] MgHierarchy build_hybrid(const StructuredMesh& mesh, std::shared_ptr<const SparseMatrix> k,
                                       const Eigen::MatrixXd& near_nullspace, int n_geo, const MgOptions& options);

// Adaptive hybrid -------------------------------------------------------------

enum class RebuildDirective { keep, rebuild };

/// Drops one geometric level each time a solve needs more than the iteration
/// threshold, down to the minimum.
class AdaptiveHybridController {
public:
    explicit AdaptiveHybridController(int n_geo_start, int min_geo = 2, int iteration_threshold = 200);

    RebuildDirective adapt_after_solve(int last_iterations);
    [[nodiscard]] int n_geo() const { return n_geo_; }
    [[nodiscard]] int min_geo() const { return min_geo_; }
    [[nodiscard]] int iteration_threshold() const { return threshold_; }

private:
    int n_geo_;
    int min_geo_;
    int threshold_;
};

}  // namespace topomg
