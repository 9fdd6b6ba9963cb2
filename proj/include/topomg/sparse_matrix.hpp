#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace topomg {

using Index = std::int32_t;
using Vector = std::vector<double>;

/// Compressed sparse row matrix. Column indices inside a row are strictly
/// increasing; explicit zeros are allowed (they keep assembled patterns fixed).
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(Index rows, Index cols, std::vector<std::size_t> row_ptr,
                 std::vector<Index> col_idx, std::vector<double> values);

    static SparseMatrix identity(Index n);

    [[nodiscard]] Index rows() const { return rows_; }
    [[nodiscard]] Index cols() const { return cols_; }
    [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    [[nodiscard]] std::span<const Index> col_idx() const { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }

    [[nodiscard]] std::span<const Index> row_cols(Index r) const {
        return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    [[nodiscard]] std::span<const double> row_vals(Index r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    /// Entry lookup by binary search; 0 when structurally absent.
    [[nodiscard]] double coeff(Index r, Index c) const;
    /// Position of (r, c) in the value array, or npos.
    [[nodiscard]] std::size_t find(Index r, Index c) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] Vector multiply(std::span<const double> x) const;
    /// y = A^T x
    [[nodiscard]] Vector multiply_transpose(std::span<const double> x) const;

    [[nodiscard]] Vector diagonal() const;
    [[nodiscard]] SparseMatrix transpose() const;
    [[nodiscard]] double max_abs() const;
    [[nodiscard]] double frobenius_norm() const;
    /// max |A_ij - A_ji|
    [[nodiscard]] double max_asymmetry() const;

    void scale(double s);
    /// Drop stored entries with |a| <= tol (tol = 0 drops explicit zeros).
    [[nodiscard]] SparseMatrix pruned(double tol = 0.0) const;

    [[nodiscard]] Eigen::MatrixXd to_dense() const;
    [[nodiscard]] Eigen::SparseMatrix<double> to_eigen() const;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<Index> col_idx_;
    std::vector<double> values_;
};

/// Collects (row, col, value) triplets; duplicates are summed on build.
class TripletBuilder {
public:
    TripletBuilder(Index rows, Index cols) : rows_(rows), cols_(cols) {}
    void reserve(std::size_t n) { entries_.reserve(n); }
    void add(Index r, Index c, double v) { entries_.push_back({r, c, v}); }
    [[nodiscard]] SparseMatrix build() const;

private:
    struct Entry {
        Index row;
        Index col;
        double value;
    };
    Index rows_;
    Index cols_;
    std::vector<Entry> entries_;
};

/// C = A * B (Gustavson row-by-row product).
[[nodiscard]] SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);
/// Galerkin triple product P^T A P, symmetrized.
[[nodiscard]] SparseMatrix galerkin_product(const SparseMatrix& a, const SparseMatrix& p);
/// alpha A + beta B
[[nodiscard]] SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0,
                               double beta = 1.0);
[[nodiscard]] SparseMatrix from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);

// Dense vector kernels.
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double alpha);

}  // namespace topomg
