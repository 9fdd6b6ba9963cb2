#include "topomg/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace topomg {

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<std::size_t> row_ptr,
                           std::vector<Index> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
    if (row_ptr_.size() != static_cast<std::size_t>(rows_) + 1 || col_idx_.size() != values_.size() ||
        row_ptr_.back() != values_.size()) {
        throw std::invalid_argument("SparseMatrix: inconsistent CSR arrays");
    }
}

SparseMatrix SparseMatrix::identity(Index n) {
    std::vector<std::size_t> ptr(n + 1);
    std::iota(ptr.begin(), ptr.end(), std::size_t{0});
    std::vector<Index> cols(n);
    std::iota(cols.begin(), cols.end(), Index{0});
    return SparseMatrix(n, n, std::move(ptr), std::move(cols), std::vector<double>(n, 1.0));
}

std::size_t SparseMatrix::find(Index r, Index c) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return npos;
    return static_cast<std::size_t>(it - col_idx_.begin());
}

double SparseMatrix::coeff(Index r, Index c) const {
    const auto pos = find(r, c);
    return pos == npos ? 0.0 : values_[pos];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_)) {
        throw std::invalid_argument("SparseMatrix::multiply: size mismatch");
    }
    const std::size_t* ptr = row_ptr_.data();
    const Index* ci = col_idx_.data();
    const double* v = values_.data();
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) s += v[k] * x[ci[k]];
        y[r] = s;
    }
}

Vector SparseMatrix::multiply(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
}

Vector SparseMatrix::multiply_transpose(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(rows_)) {
        throw std::invalid_argument("SparseMatrix::multiply_transpose: size mismatch");
    }
    Vector y(cols_, 0.0);
    for (Index r = 0; r < rows_; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_idx_[k]] += values_[k] * xr;
    }
    return y;
}

Vector SparseMatrix::diagonal() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (Index r = 0; r < static_cast<Index>(d.size()); ++r) d[r] = coeff(r, r);
    return d;
}

SparseMatrix SparseMatrix::transpose() const {
    std::vector<std::size_t> ptr(cols_ + 1, 0);
    for (Index c : col_idx_) ++ptr[c + 1];
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    std::vector<Index> cols(values_.size());
    std::vector<double> vals(values_.size());
    std::vector<std::size_t> next(ptr.begin(), ptr.end() - 1);
    for (Index r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const auto dst = next[col_idx_[k]]++;
            cols[dst] = r;
            vals[dst] = values_[k];
        }
    }
    return SparseMatrix(cols_, rows_, std::move(ptr), std::move(cols), std::move(vals));
}

double SparseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double SparseMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

double SparseMatrix::max_asymmetry() const {
    if (rows_ != cols_) throw std::invalid_argument("max_asymmetry: matrix not square");
    double m = 0.0;
    for (Index r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            m = std::max(m, std::abs(values_[k] - coeff(col_idx_[k], r)));
        }
    }
    return m;
}

void SparseMatrix::scale(double s) {
    for (double& v : values_) v *= s;
}

SparseMatrix SparseMatrix::pruned(double tol) const {
    std::vector<std::size_t> ptr(rows_ + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(values_.size());
    vals.reserve(values_.size());
    for (Index r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (std::abs(values_[k]) > tol || (tol == 0.0 && values_[k] != 0.0)) {
                cols.push_back(col_idx_[k]);
                vals.push_back(values_[k]);
            }
        }
        ptr[r + 1] = vals.size();
    }
    return SparseMatrix(rows_, cols_, std::move(ptr), std::move(cols), std::move(vals));
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
    for (Index r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) += values_[k];
    }
    return d;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(values_.size());
    for (Index r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) trip.emplace_back(r, col_idx_[k], values_[k]);
    }
    Eigen::SparseMatrix<double> m(rows_, cols_);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

SparseMatrix TripletBuilder::build() const {
    std::vector<std::size_t> count(rows_ + 1, 0);
    for (const auto& e : entries_) {
        if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_) {
            throw std::out_of_range("TripletBuilder: index out of range");
        }
        ++count[e.row + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    std::vector<std::pair<Index, double>> sorted(entries_.size());
    std::vector<std::size_t> next(count.begin(), count.end() - 1);
    for (const auto& e : entries_) sorted[next[e.row]++] = {e.col, e.value};

    std::vector<std::size_t> ptr(rows_ + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(entries_.size());
    vals.reserve(entries_.size());
    for (Index r = 0; r < rows_; ++r) {
        auto first = sorted.begin() + static_cast<std::ptrdiff_t>(count[r]);
        auto last = sorted.begin() + static_cast<std::ptrdiff_t>(count[r + 1]);
        std::stable_sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto it = first; it != last; ++it) {
            if (!cols.empty() && vals.size() > ptr[r] && cols.back() == it->first) {
                vals.back() += it->second;
            } else {
                cols.push_back(it->first);
                vals.push_back(it->second);
            }
        }
        ptr[r + 1] = vals.size();
    }
    return SparseMatrix(rows_, cols_, std::move(ptr), std::move(cols), std::move(vals));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
    const Index n = a.rows();
    const Index m = b.cols();
    std::vector<std::size_t> ptr(n + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(a.nonzeros() + b.nonzeros());
    vals.reserve(a.nonzeros() + b.nonzeros());

    std::vector<double> acc(m, 0.0);
    std::vector<Index> marker(m, -1);
    std::vector<Index> row_cols;
    for (Index r = 0; r < n; ++r) {
        row_cols.clear();
        const auto acols = a.row_cols(r);
        const auto avals = a.row_vals(r);
        for (std::size_t i = 0; i < acols.size(); ++i) {
            const Index k = acols[i];
            const double av = avals[i];
            const auto bcols = b.row_cols(k);
            const auto bvals = b.row_vals(k);
            for (std::size_t j = 0; j < bcols.size(); ++j) {
                const Index c = bcols[j];
                if (marker[c] != r) {
                    marker[c] = r;
                    acc[c] = 0.0;
                    row_cols.push_back(c);
                }
                acc[c] += av * bvals[j];
            }
        }
        std::sort(row_cols.begin(), row_cols.end());
        for (Index c : row_cols) {
            cols.push_back(c);
            vals.push_back(acc[c]);
        }
        ptr[r + 1] = vals.size();
    }
    return SparseMatrix(n, m, std::move(ptr), std::move(cols), std::move(vals));
}

SparseMatrix galerkin_product(const SparseMatrix& a, const SparseMatrix& p) {
    const SparseMatrix ap = multiply(a, p);
    const SparseMatrix coarse = multiply(p.transpose(), ap);
    // Roundoff breaks exact symmetry of P^T A P; restore it.
    return add(coarse, coarse.transpose(), 0.5, 0.5);
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha, double beta) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
    std::vector<std::size_t> ptr(a.rows() + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(a.nonzeros() + b.nonzeros());
    vals.reserve(a.nonzeros() + b.nonzeros());
    for (Index r = 0; r < a.rows(); ++r) {
        const auto ac = a.row_cols(r);
        const auto av = a.row_vals(r);
        const auto bc = b.row_cols(r);
        const auto bv = b.row_vals(r);
        std::size_t i = 0, j = 0;
        while (i < ac.size() || j < bc.size()) {
            if (j == bc.size() || (i < ac.size() && ac[i] < bc[j])) {
                cols.push_back(ac[i]);
                vals.push_back(alpha * av[i++]);
            } else if (i == ac.size() || bc[j] < ac[i]) {
                cols.push_back(bc[j]);
                vals.push_back(beta * bv[j++]);
            } else {
                cols.push_back(ac[i]);
                vals.push_back(alpha * av[i++] + beta * bv[j++]);
            }
        }
        ptr[r + 1] = vals.size();
    }
    return SparseMatrix(a.rows(), a.cols(), std::move(ptr), std::move(cols), std::move(vals));
}

SparseMatrix from_dense(const Eigen::MatrixXd& dense, double drop_tol) {
    TripletBuilder tb(static_cast<Index>(dense.rows()), static_cast<Index>(dense.cols()));
    for (Index r = 0; r < dense.rows(); ++r) {
        for (Index c = 0; c < dense.cols(); ++c) {
            if (std::abs(dense(r, c)) > drop_tol) tb.add(r, c, dense(r, c));
        }
    }
    return tb.build();
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(std::span<double> x, double alpha) {
    for (double& v : x) v *= alpha;
}

}  // namespace topomg
