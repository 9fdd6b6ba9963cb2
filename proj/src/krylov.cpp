#include "topomg/krylov.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace topomg {

void SolveConfig::validate() const {
    if (!(rtol > 0.0 && rtol < 1.0)) throw std::invalid_argument("solve config: rtol must be in (0, 1)");
    if (restart < 1) throw std::invalid_argument("solve config: restart must be >= 1");
    if (max_iterations < 0) throw std::invalid_argument("solve config: max_iterations must be >= 0");
}

LinearOperator as_operator(const SparseMatrix& a) {
    return [&a](std::span<const double> in, std::span<double> out) { a.multiply(in, out); };
}

namespace {

std::pair<Vector, SolveRecord> gmres_impl(const LinearOperator& a, std::span<const double> b,
                                          std::span<const double> x0, const LinearOperator& m,
                                          const SolveConfig& cfg, bool flexible) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = b.size();
    if (x0.size() != n) throw std::invalid_argument("gmres: initial guess size mismatch");

    SolveRecord rec;
    Vector x(x0.begin(), x0.end());
    Vector r(n);
    auto residual = [&] {
        a(x, r);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        return norm2(r);
    };
    double beta = residual();
    rec.initial_residual = beta;
    rec.residual_history.push_back(beta);
    // Roundoff floor: a residual already at machine-precision level of b
    // cannot be reduced further by a factor rtol.
    const double tol = std::max(cfg.rtol * beta, 1e-13 * norm2(b));

    const int restart = cfg.restart;
    std::vector<Vector> v;
    std::vector<Vector> z;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd g(restart + 1);
    Eigen::VectorXd cs(restart), sn(restart);
    Vector w(n);
    Vector zj(n);

    bool done = beta <= tol;
    rec.converged = done;
    while (!done && rec.iterations < cfg.max_iterations) {
        v.assign(1, r);
        scale(v[0], 1.0 / beta);
        if (flexible) z.clear();
        g.setZero();
        g(0) = beta;
        int j = 0;
        bool breakdown = false;
        for (; j < restart && rec.iterations < cfg.max_iterations; ++j) {
            if (m) {
                m(v[j], zj);
            } else {
                zj = v[j];
            }
            if (flexible) z.push_back(zj);
            a(zj, w);
            for (int i = 0; i <= j; ++i) {
                h(i, j) = dot(w, v[i]);
                axpy(-h(i, j), v[i], w);
            }
            const double hnext = norm2(w);
            h(j + 1, j) = hnext;
            for (int i = 0; i < j; ++i) {
                const double t = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
                h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
                h(i, j) = t;
            }
            const double denom = std::hypot(h(j, j), h(j + 1, j));
            cs(j) = denom == 0.0 ? 1.0 : h(j, j) / denom;
            sn(j) = denom == 0.0 ? 0.0 : h(j + 1, j) / denom;
            h(j, j) = denom;
            h(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);
            ++rec.iterations;
            const double est = std::abs(g(j + 1));
            rec.residual_history.push_back(est);
            if (hnext < 1e-14 * beta) {
                breakdown = true;
                ++j;
                break;
            }
            v.emplace_back(w);
            scale(v.back(), 1.0 / hnext);
            if (est <= tol) {
                ++j;
                break;
            }
        }
        // Solve the j x j triangular system and update x.
        Eigen::VectorXd y = Eigen::VectorXd::Zero(j);
        for (int i = j - 1; i >= 0; --i) {
            double s = g(i);
            for (int k = i + 1; k < j; ++k) s -= h(i, k) * y(k);
            y(i) = h(i, i) == 0.0 ? 0.0 : s / h(i, i);
        }
        if (flexible) {
            for (int i = 0; i < j; ++i) axpy(y(i), z[i], x);
        } else {
            Vector comb(n, 0.0);
            for (int i = 0; i < j; ++i) axpy(y(i), v[i], comb);
            if (m) {
                m(comb, zj);
                axpy(1.0, zj, x);
            } else {
                axpy(1.0, comb, x);
            }
        }
        beta = residual();
        rec.residual_history.back() = beta;
        if (beta <= tol) {
            rec.converged = true;
            done = true;
        } else if (breakdown) {
            rec.breakdown = true;
            done = true;
        } else if (beta == 0.0) {
            done = true;
        }
    }
    rec.final_residual = beta;
    rec.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(x), std::move(rec)};
}

}  // namespace

std::pair<Vector, SolveRecord> gmres_solve(const SparseMatrix& a, std::span<const double> b,
                                           std::span<const double> x0, const LinearOperator& m,
                                           const SolveConfig& cfg) {
    if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != b.size()) {
        throw std::invalid_argument("gmres: matrix must be square and match b");
    }
    return gmres_impl(as_operator(a), b, x0, m, cfg, false);
}

std::pair<Vector, SolveRecord> fgmres_solve(const SparseMatrix& a, std::span<const double> b,
                                            std::span<const double> x0, const LinearOperator& m,
                                            const SolveConfig& cfg) {
    if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != b.size()) {
        throw std::invalid_argument("fgmres: matrix must be square and match b");
    }
    return gmres_impl(as_operator(a), b, x0, m, cfg, true);
}

std::pair<Vector, SolveRecord> krylov_solve(const LinearOperator& a, std::span<const double> b,
                                            std::span<const double> x0, const LinearOperator& m,
                                            const SolveConfig& cfg) {
    return gmres_impl(a, b, x0, m, cfg, cfg.method == KrylovMethod::fgmres);
}

}  // namespace topomg
