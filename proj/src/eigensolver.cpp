#include "topomg/eigensolver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace topomg {

void DavidsonConfig::validate() const {
    if (j_min < 1 || j_min >= j_max) throw std::invalid_argument("davidson: need 1 <= j_min < j_max");
    if (n_modes < 1 || n_modes > j_min) throw std::invalid_argument("davidson: need 1 <= n_modes <= j_min");
    if (!(rtol_residual > 0.0)) throw std::invalid_argument("davidson: rtol_residual must be positive");
    if (rtol_eigenvalue_stall < 0.0) throw std::invalid_argument("davidson: stall tolerance must be >= 0");
    if (max_iterations < 0) throw std::invalid_argument("davidson: max_iterations must be >= 0");
}

namespace {

Eigen::VectorXd apply_op(const LinearOperator& op, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(x.size());
    op(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
       std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
    return y;
}

Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

RitzPairs sorted_descending(const Eigen::VectorXd& values, const Eigen::MatrixXd& coeffs, const Eigen::MatrixXd& v) {
    const Eigen::Index k = values.size();
    RitzPairs out;
    out.values.resize(k);
    out.coeffs.resize(coeffs.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        out.values(i) = values(k - 1 - i);
        out.coeffs.col(i) = coeffs.col(k - 1 - i);
    }
    out.vectors = v * out.coeffs;
    return out;
}

void append_column(Eigen::MatrixXd& m, const Eigen::VectorXd& c) {
    m.conservativeResize(c.size(), m.cols() + 1);
    m.col(m.cols() - 1) = c;
}

}  // namespace

RitzPairs rayleigh_ritz(const Eigen::MatrixXd& v, const Eigen::MatrixXd& av, const Eigen::MatrixXd& bv) {
    if (v.cols() == 0) throw std::invalid_argument("rayleigh_ritz: empty basis");
    const Eigen::MatrixXd h = symmetric_part(v.transpose() * av);
    const Eigen::MatrixXd g = symmetric_part(v.transpose() * bv);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(h, g);
    if (ges.info() == Eigen::Success) return sorted_descending(ges.eigenvalues(), ges.eigenvectors(), v);

    // Lost B-orthonormality: rebuild an orthonormal basis of span(V) from the
    // Gram matrix, discarding directions it cannot resolve, and retry once.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(g);
    if (gs.info() != Eigen::Success) throw std::runtime_error("rayleigh_ritz: Gram matrix eigensolve failed");
    const double top = gs.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        if (gs.eigenvalues()(i) > 1e-12 * top) keep.push_back(i);
    }
    if (top <= 0.0 || keep.empty()) throw std::runtime_error("rayleigh_ritz: projected B matrix is not positive definite");
    Eigen::MatrixXd w(g.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        w.col(static_cast<Eigen::Index>(c)) = gs.eigenvectors().col(keep[c]) / std::sqrt(gs.eigenvalues()(keep[c]));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(symmetric_part(w.transpose() * h * w));
    if (hs.info() != Eigen::Success) throw std::runtime_error("rayleigh_ritz: projected eigensolve failed");
    return sorted_descending(hs.eigenvalues(), w * hs.eigenvectors(), v);
}

RitzPairs rayleigh_ritz(const LinearOperator& a, const LinearOperator& b, const Eigen::MatrixXd& v) {
    Eigen::MatrixXd av(v.rows(), v.cols()), bv(v.rows(), v.cols());
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        av.col(c) = apply_op(a, v.col(c));
        bv.col(c) = apply_op(b, v.col(c));
    }
    return rayleigh_ritz(v, av, bv);
}

std::optional<OrthoResult> b_orthonormalize(const Eigen::MatrixXd& v, const Eigen::MatrixXd& bv, Eigen::VectorXd z,
                                            const LinearOperator& b) {
    const Eigen::VectorXd bz0 = apply_op(b, z);
    const double q0 = z.dot(bz0);
    if (q0 < 0.0) throw std::runtime_error("b_orthonormalize: negative Rayleigh quotient, B is not SPD");
    if (q0 == 0.0) return std::nullopt;
    const double n0 = std::sqrt(q0);
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index c = 0; c < v.cols(); ++c) z -= bv.col(c).dot(z) * v.col(c);
    }
    Eigen::VectorXd bz = apply_op(b, z);
    const double q = z.dot(bz);
    if (q < 0.0) throw std::runtime_error("b_orthonormalize: negative Rayleigh quotient, B is not SPD");
    const double nz = std::sqrt(q);
    if (nz < 1e-10 * n0) return std::nullopt;
    return OrthoResult{z / nz, bz / nz};
}

EigenResult generalized_davidson(const LinearOperator& a, const LinearOperator& b, const LinearOperator& m, Index n,
                                 const DavidsonConfig& cfg, const std::vector<Vector>& initial_space) {
    cfg.validate();
    if (n < cfg.n_modes) throw std::invalid_argument("davidson: fewer unknowns than requested modes");
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const auto random_vector = [&] {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) r(i) = dist(rng);
        return r;
    };

    Eigen::MatrixXd v(n, 0), av(n, 0), bv(n, 0);
    Eigen::MatrixXd xl(n, 0), bxl(n, 0);  // locked vectors
    std::vector<double> locked_values, locked_residuals;

    // Orthogonalizes against locked vectors and the basis, then appends.
    const auto expand = [&](const Eigen::VectorXd& z) {
        Eigen::MatrixXd w(n, xl.cols() + v.cols()), bw(n, xl.cols() + v.cols());
        w << xl, v;
        bw << bxl, bv;
        auto o = b_orthonormalize(w, bw, z, b);
        if (!o) return false;
        append_column(v, o->z);
        append_column(bv, o->bz);
        append_column(av, apply_op(a, o->z));
        return true;
    };
    const auto expand_or_random = [&](const Eigen::VectorXd& z) {
        if (expand(z)) return;
        for (int attempt = 0; attempt < 10; ++attempt) {
            if (expand(random_vector())) return;
        }
        throw std::runtime_error("davidson: unable to expand the search space");
    };
    const auto compress = [&](const Eigen::MatrixXd& y) {
        v = v * y;
        av = av * y;
        bv = bv * y;
    };

    for (const auto& s : initial_space) {
        if (v.cols() >= cfg.j_max) break;
        if (static_cast<Index>(s.size()) != n) throw std::invalid_argument("davidson: initial vector size mismatch");
        expand(Eigen::Map<const Eigen::VectorXd>(s.data(), n));
    }
    if (v.cols() == 0) {
        while (v.cols() < std::min<Eigen::Index>(cfg.j_min, n)) expand_or_random(random_vector());
    }

    EigenResult result;
    double previous = std::numeric_limits<double>::quiet_NaN();
    RitzPairs rr;
    Eigen::VectorXd r;
    bool stopped = false;
    while (static_cast<int>(locked_values.size()) < cfg.n_modes) {
        rr = rayleigh_ritz(v, av, bv);
        // Lock every leading Ritz pair that meets a convergence test.
        for (;;) {
            const double theta = rr.values(0);
            const Eigen::VectorXd ax = av * rr.coeffs.col(0);
            const Eigen::VectorXd bx = bv * rr.coeffs.col(0);
            r = ax - theta * bx;
            const double anorm = ax.norm();
            const double res = anorm > 0.0 ? r.norm() / anorm : r.norm();
            const bool stall = !std::isnan(previous) &&
                               std::abs(theta - previous) < cfg.rtol_eigenvalue_stall * std::abs(theta);
            if (!(res <= cfg.rtol_residual || stall)) break;
            append_column(xl, rr.vectors.col(0));
            append_column(bxl, bx);
            locked_values.push_back(theta);
            locked_residuals.push_back(res);
            previous = std::numeric_limits<double>::quiet_NaN();
            if (static_cast<int>(locked_values.size()) == cfg.n_modes) break;
            if (v.cols() > 1) {
                compress(rr.coeffs.rightCols(rr.coeffs.cols() - 1));
            } else {
                v.resize(n, 0);
                av.resize(n, 0);
                bv.resize(n, 0);
                expand_or_random(random_vector());
            }
            rr = rayleigh_ritz(v, av, bv);
        }
        if (static_cast<int>(locked_values.size()) == cfg.n_modes) break;
        if (result.iterations >= cfg.max_iterations) {
            stopped = true;
            break;
        }
        previous = rr.values(0);
        Eigen::VectorXd z = m ? apply_op(m, r) : r;
        if (v.cols() >= cfg.j_max) {
            compress(rr.coeffs.leftCols(cfg.j_min));
            rr = rayleigh_ritz(v, av, bv);
        }
        expand_or_random(z);
        ++result.iterations;
    }

    struct Mode {
        double value;
        Eigen::VectorXd x;
        bool converged;
        double residual;
    };
    std::vector<Mode> modes;
    for (std::size_t i = 0; i < locked_values.size(); ++i) {
        modes.push_back({locked_values[i], xl.col(static_cast<Eigen::Index>(i)), true, locked_residuals[i]});
    }
    if (stopped) {
        for (Eigen::Index i = 0; i < rr.values.size() && static_cast<int>(modes.size()) < cfg.n_modes; ++i) {
            const Eigen::VectorXd ax = av * rr.coeffs.col(i);
            const Eigen::VectorXd bx = bv * rr.coeffs.col(i);
            const double anorm = ax.norm();
            const double res = (ax - rr.values(i) * bx).norm() / (anorm > 0.0 ? anorm : 1.0);
            modes.push_back({rr.values(i), rr.vectors.col(i), false, res});
        }
    }
    std::stable_sort(modes.begin(), modes.end(), [](const Mode& p, const Mode& q) { return p.value > q.value; });
    for (const auto& md : modes) {
        result.eigenvalues.push_back(md.value);
        result.eigenvectors.emplace_back(md.x.data(), md.x.data() + md.x.size());
        result.converged.push_back(md.converged);
        result.residuals.push_back(md.residual);
        if (md.converged) ++result.converged_count;
    }
    result.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

EigenResult generalized_davidson(const SparseMatrix& a, const SparseMatrix& b, const LinearOperator& m,
                                 const DavidsonConfig& cfg, const std::vector<Vector>& initial_space) {
    if (a.rows() != b.rows() || a.rows() != a.cols() || b.rows() != b.cols()) {
        throw std::invalid_argument("davidson: A and B must be square and of equal size");
    }
    return generalized_davidson(as_operator(a), as_operator(b), m, a.rows(), cfg, initial_space);
}

}  // namespace topomg
