#include <cmath>
#include <random>
#include <stdexcept>

#include "topomg/krylov.hpp"
#include "topomg/multigrid.hpp"

namespace topomg {

std::string to_string(SmootherKind kind) {
    switch (kind) {
        case SmootherKind::weighted_jacobi: return "weighted_jacobi";
        case SmootherKind::block_jacobi: return "block_jacobi";
        case SmootherKind::sor_chebyshev: return "sor_chebyshev";
        case SmootherKind::sor_gmres: return "sor_gmres";
    }
    return "unknown";
}

SmootherKind smoother_kind_from_string(const std::string& name) {
    if (name == "weighted_jacobi" || name == "jacobi") return SmootherKind::weighted_jacobi;
    if (name == "block_jacobi") return SmootherKind::block_jacobi;
    if (name == "sor_chebyshev" || name == "chebyshev") return SmootherKind::sor_chebyshev;
    if (name == "sor_gmres" || name == "gmres") return SmootherKind::sor_gmres;
    throw std::invalid_argument("unknown smoother kind: " + name);
}

void SmootherConfig::validate() const {
    if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("smoother: weight must be in [0, 1]");
    if (inner_iterations < 1) throw std::invalid_argument("smoother: inner_iterations must be >= 1");
    if (block_size < 1) throw std::invalid_argument("smoother: block_size must be >= 1");
    if (power_steps < 1) throw std::invalid_argument("smoother: power_steps must be >= 1");
    if (!(chebyshev_lower > 0.0 && chebyshev_lower < chebyshev_upper)) {
        throw std::invalid_argument("smoother: invalid Chebyshev bounds");
    }
}

Smoother::Smoother(const SmootherConfig& config, const SparseMatrix& a, std::vector<Index> block_ptr,
                   std::uint64_t seed)
    : config_(config), block_ptr_(std::move(block_ptr)) {
    diag_ = a.diagonal();
    inv_diag_.resize(diag_.size());
    for (std::size_t i = 0; i < diag_.size(); ++i) {
        if (diag_[i] == 0.0) throw std::runtime_error("smoother: zero diagonal entry");
        inv_diag_[i] = 1.0 / diag_[i];
    }
    if (config_.kind == SmootherKind::block_jacobi) {
        if (block_ptr_.empty()) block_ptr_ = uniform_blocks(a.rows(), config_.block_size);
        const Index nblocks = static_cast<Index>(block_ptr_.size()) - 1;
        block_inv_.resize(nblocks);
        for (Index blk = 0; blk < nblocks; ++blk) {
            const Index r0 = block_ptr_[blk];
            const Index bs = block_ptr_[blk + 1] - r0;
            Eigen::MatrixXd m(bs, bs);
            for (Index i = 0; i < bs; ++i) {
                for (Index j = 0; j < bs; ++j) m(i, j) = a.coeff(r0 + i, r0 + j);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
            if (!lu.isInvertible()) throw std::runtime_error("smoother: singular nodal block");
            block_inv_[blk] = lu.inverse();
        }
    }
    if (config_.kind == SmootherKind::sor_chebyshev) {
        // Power iteration on M_ssor^-1 A.
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vector v(a.rows()), av(a.rows()), z(a.rows());
        for (double& x : v) x = dist(rng);
        double nv = norm2(v);
        double lambda = 1.0;
        for (int s = 0; s < config_.power_steps && nv > 0.0; ++s) {
            scale(v, 1.0 / nv);
            a.multiply(v, av);
            ssor_apply(a, av, z);
            nv = norm2(z);
            lambda = nv;
            v.swap(z);
        }
        lambda_max_ = lambda > 0.0 ? lambda : 1.0;
    }
}

void Smoother::ssor_apply(const SparseMatrix& a, std::span<const double> r, std::span<double> z) const {
    const Index n = a.rows();
    const auto ptr = a.row_ptr();
    const auto cols = a.col_idx();
    const auto vals = a.values();
    for (Index i = 0; i < n; ++i) {
        double s = r[i];
        for (std::size_t k = ptr[i]; k < ptr[i + 1] && cols[k] < i; ++k) s -= vals[k] * z[cols[k]];
        z[i] = s * inv_diag_[i];
    }
    for (Index i = n - 1; i >= 0; --i) {
        double s = 0.0;
        for (std::size_t k = ptr[i + 1]; k > ptr[i] && cols[k - 1] > i; --k) s += vals[k - 1] * z[cols[k - 1]];
        z[i] -= s * inv_diag_[i];
    }
}

void Smoother::jacobi_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b, Vector& r) const {
    a.multiply(x, r);
    const double w = config_.weight;
    for (std::size_t i = 0; i < r.size(); ++i) x[i] += w * inv_diag_[i] * (b[i] - r[i]);
}

void Smoother::block_jacobi_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b,
                                 Vector& r) const {
    a.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    const double w = config_.weight;
    const Index nblocks = static_cast<Index>(block_inv_.size());
    for (Index blk = 0; blk < nblocks; ++blk) {
        const Index r0 = block_ptr_[blk];
        const auto& inv = block_inv_[blk];
        const Index bs = static_cast<Index>(inv.rows());
        for (Index i = 0; i < bs; ++i) {
            double s = 0.0;
            for (Index j = 0; j < bs; ++j) s += inv(i, j) * r[r0 + j];
            x[r0 + i] += w * s;
        }
    }
}

void Smoother::chebyshev_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b) const {
    const std::size_t n = b.size();
    const double lo = config_.chebyshev_lower * lambda_max_;
    const double hi = config_.chebyshev_upper * lambda_max_;
    const double theta = 0.5 * (hi + lo);
    const double delta = 0.5 * (hi - lo);
    const double sigma = theta / delta;
    double rho_prev = 1.0 / sigma;

    Vector r(n), z(n), d(n), ad(n);
    a.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    ssor_apply(a, r, z);
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] / theta;
    for (int k = 0; k < config_.inner_iterations; ++k) {
        axpy(1.0, d, x);
        if (k + 1 == config_.inner_iterations) break;
        a.multiply(d, ad);
        axpy(-1.0, ad, r);
        ssor_apply(a, r, z);
        const double rho = 1.0 / (2.0 * sigma - rho_prev);
        for (std::size_t i = 0; i < n; ++i) d[i] = rho * rho_prev * d[i] + (2.0 * rho / delta) * z[i];
        rho_prev = rho;
    }
}

void Smoother::gmres_pass(const SparseMatrix& a, std::span<double> x, std::span<const double> b) const {
    SolveConfig cfg;
    cfg.method = KrylovMethod::gmres;
    cfg.rtol = 1e-30;
    cfg.max_iterations = config_.inner_iterations;
    cfg.restart = config_.inner_iterations;
    const LinearOperator m = [this, &a](std::span<const double> in, std::span<double> out) { ssor_apply(a, in, out); };
    auto [xn, rec] = gmres_solve(a, b, x, m, cfg);
    std::copy(xn.begin(), xn.end(), x.begin());
}

void Smoother::smooth(const SparseMatrix& a, std::span<double> x, std::span<const double> b, int passes) const {
    Vector r;
    if (config_.kind == SmootherKind::weighted_jacobi || config_.kind == SmootherKind::block_jacobi) {
        r.resize(b.size());
    }
    for (int p = 0; p < passes; ++p) {
        switch (config_.kind) {
            case SmootherKind::weighted_jacobi: jacobi_pass(a, x, b, r); break;
            case SmootherKind::block_jacobi: block_jacobi_pass(a, x, b, r); break;
            case SmootherKind::sor_chebyshev: chebyshev_pass(a, x, b); break;
            case SmootherKind::sor_gmres: gmres_pass(a, x, b); break;
        }
    }
}

void smooth(const SmootherConfig& config, const SparseMatrix& a, std::span<double> x, std::span<const double> b,
            int passes) {
    if (config.weight == 0.0 && !(config.kind == SmootherKind::sor_chebyshev || config.kind == SmootherKind::sor_gmres)) {
        return;  // zero damping is the identity update
    }
    config.validate();
    Smoother(config, a, {}, 12345).smooth(a, x, b, passes);
}

}  // namespace topomg
