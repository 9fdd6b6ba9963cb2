#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "topomg/optimization.hpp"

namespace topomg {

namespace {

// Minimizer of p/(U-x) + q/(x-L) + lam*a*x on [lo, hi]. The derivative is
// increasing in x, so a safeguarded Newton iteration on it converges.
double primal_minimizer(double p, double q, double low, double upp, double lo, double hi, double la) {
    const auto deriv = [&](double x) {
        const double du = upp - x, dl = x - low;
        return p / (du * du) - q / (dl * dl) + la;
    };
    if (deriv(lo) >= 0.0) return lo;
    if (deriv(hi) <= 0.0) return hi;
    double a = lo, b = hi;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double g = deriv(x);
        if (g > 0.0) {
            b = x;
        } else {
            a = x;
        }
        const double du = upp - x, dl = x - low;
        const double h = 2.0 * p / (du * du * du) + 2.0 * q / (dl * dl * dl);
        double next = h > 0.0 ? x - g / h : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - x) <= 1e-14 * (1.0 + std::abs(x)) || b - a <= 1e-15) return next;
        x = next;
    }
    return x;
}

}  // namespace

MmaSubproblemSolution solve_mma_subproblem(const MmaSubproblem& sp, int max_dual_iterations) {
    const std::size_t n = sp.p.size();
    if (sp.q.size() != n || sp.lower.size() != n || sp.upper.size() != n || sp.lo.size() != n || sp.hi.size() != n ||
        sp.a.size() != n) {
        throw std::invalid_argument("mma subproblem: inconsistent sizes");
    }
    MmaSubproblemSolution sol;
    sol.x.resize(n);
    const auto primal = [&](double lam) {
        for (std::size_t j = 0; j < n; ++j) {
            sol.x[j] = primal_minimizer(sp.p[j], sp.q[j], sp.lower[j], sp.upper[j], sp.lo[j], sp.hi[j], lam * sp.a[j]);
        }
        return dot(sp.a, sol.x) - sp.b;  // constraint value, nonincreasing in lam
    };
    const double scale = std::max(std::abs(sp.b), 1e-300);
    if (primal(0.0) <= 0.0) return sol;

    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (primal(hi) > 0.0) {
        lo = hi;
        hi *= 4.0;
        if (++guard > 200) {
            std::ostringstream os;
            os << "mma subproblem: volume constraint infeasible within move limits (b = " << sp.b
               << ", minimum attainable = " << dot(sp.a, sp.lo) << ")";
            throw std::runtime_error(os.str());
        }
    }
    double g = 0.0;
    for (sol.dual_iterations = 0; sol.dual_iterations < max_dual_iterations; ++sol.dual_iterations) {
        sol.lambda = 0.5 * (lo + hi);
        g = primal(sol.lambda);
        if (std::abs(g) <= 1e-12 * scale) break;
        if (g > 0.0) {
            lo = sol.lambda;
        } else {
            hi = sol.lambda;
        }
    }
    // Finish on the feasible side of the bracket.
    if (g > 0.0) {
        sol.lambda = hi;
        g = primal(hi);
    }
    if (g > 1e-6 * scale) {
        std::ostringstream os;
        os << "mma subproblem: dual bisection did not converge after " << max_dual_iterations
           << " iterations (lambda in [" << lo << ", " << hi << "], violation " << g << ")";
        throw std::runtime_error(os.str());
    }
    return sol;
}

Vector mma_update(MmaState& st, const MmaSettings& s, std::span<const double> x, std::span<const double> df,
                  std::span<const double> a, double b) {
    const std::size_t n = x.size();
    if (df.size() != n || a.size() != n) throw std::invalid_argument("mma_update: inconsistent sizes");
    for (double d : df) {
        if (!std::isfinite(d)) throw std::invalid_argument("mma_update: non-finite sensitivity");
    }
    const double xmin = 0.0, xmax = 1.0, range = xmax - xmin;
    if (st.iteration < 2 || st.lower.size() != n) {
        st.lower.resize(n);
        st.upper.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            st.lower[j] = x[j] - s.asym_init * range;
            st.upper[j] = x[j] + s.asym_init * range;
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            const double osc = (x[j] - st.x_prev1[j]) * (st.x_prev1[j] - st.x_prev2[j]);
            const double gamma = osc < 0.0 ? s.asym_decrease : (osc > 0.0 ? s.asym_increase : 1.0);
            double l = x[j] - gamma * (st.x_prev1[j] - st.lower[j]);
            double u = x[j] + gamma * (st.upper[j] - st.x_prev1[j]);
            l = std::clamp(l, x[j] - s.asym_max * range, x[j] - s.asym_min * range);
            u = std::clamp(u, x[j] + s.asym_min * range, x[j] + s.asym_max * range);
            st.lower[j] = l;
            st.upper[j] = u;
        }
    }

    MmaSubproblem sp;
    sp.p.resize(n);
    sp.q.resize(n);
    sp.lo.resize(n);
    sp.hi.resize(n);
    sp.lower = st.lower;
    sp.upper = st.upper;
    sp.a.assign(a.begin(), a.end());
    sp.b = b;
    for (std::size_t j = 0; j < n; ++j) {
        const double ux = st.upper[j] - x[j];
        const double xl = x[j] - st.lower[j];
        const double reg = 1e-5 / (st.upper[j] - st.lower[j]);
        const double pos = std::max(df[j], 0.0), neg = std::max(-df[j], 0.0);
        sp.p[j] = ux * ux * (1.001 * pos + 0.001 * neg + reg);
        sp.q[j] = xl * xl * (0.001 * pos + 1.001 * neg + reg);
        sp.lo[j] = std::max({xmin, st.lower[j] + 0.1 * xl, x[j] - s.move * range});
        sp.hi[j] = std::min({xmax, st.upper[j] - 0.1 * ux, x[j] + s.move * range});
    }
    Vector xn = solve_mma_subproblem(sp, s.dual_iterations).x;

    st.x_prev2 = st.x_prev1.empty() ? Vector(x.begin(), x.end()) : st.x_prev1;
    st.x_prev1.assign(x.begin(), x.end());
    ++st.iteration;
    return xn;
}

}  // namespace topomg
