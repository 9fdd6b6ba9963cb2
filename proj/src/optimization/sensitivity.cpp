#include <chrono>
#include <cmath>
#include <stdexcept>

#include "topomg/optimization.hpp"

namespace topomg {

namespace {

Eigen::VectorXd gather(const StructuredMesh& mesh, std::span<const double> x, Index e, std::vector<Index>& dofs) {
    mesh.element_dofs(e, dofs);
    Eigen::VectorXd out(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i) out(static_cast<Eigen::Index>(i)) = x[dofs[i]];
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Vector element_moduli(const SimpLaw& law, std::span<const double> rho) {
    Vector e(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) e[i] = simp_modulus(law, rho[i]);
    return e;
}

Vector element_sigma_moduli(const StressSimpLaw& law, std::span<const double> rho) {
    Vector e(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) e[i] = stress_simp_modulus(law, rho[i]);
    return e;
}

Evaluation compliance_and_sensitivity(const StructuredMesh& mesh, const ElementKernel& kernel,
                                      const FilterOperator& filter, const SimpLaw& law, std::span<const double> rho,
                                      std::span<const double> load, std::span<const double> u) {
    if (static_cast<Index>(rho.size()) != mesh.element_count()) throw std::invalid_argument("compliance: rho size");
    if (load.size() != u.size()) throw std::invalid_argument("compliance: load and displacement sizes differ");
    Evaluation ev;
    ev.objective = dot(load, u);
    ev.d_rho.assign(rho.size(), 0.0);
    const Eigen::MatrixXd& ke = kernel.unit_stiffness();
    std::vector<Index> dofs(mesh.dofs_per_element());
    for (Index e = 0; e < mesh.element_count(); ++e) {
        const Eigen::VectorXd ue = gather(mesh, u, e, dofs);
        ev.d_rho[e] = -simp_modulus_derivative(law, rho[e]) * ue.dot(ke * ue);
    }
    ev.d_alpha = filter.apply_transpose(ev.d_rho);
    return ev;
}

Vector adjoint_rhs(const StructuredMesh& mesh, const ElementKernel& kernel, const BoundaryConditions& bc,
                   std::span<const double> phi, std::span<const double> sigma_moduli) {
    Vector rhs(mesh.dof_count(), 0.0);
    std::vector<Index> dofs(mesh.dofs_per_element());
    for (Index e = 0; e < mesh.element_count(); ++e) {
        if (sigma_moduli[e] == 0.0) continue;
        const Eigen::VectorXd pe = gather(mesh, phi, e, dofs);
        const Eigen::VectorXd g = kernel.stress_stiffness_gradient({pe.data(), static_cast<std::size_t>(pe.size())},
                                                                   sigma_moduli[e]);
        for (std::size_t i = 0; i < dofs.size(); ++i) rhs[dofs[i]] += g(static_cast<Eigen::Index>(i));
    }
    for (Index f : bc.fixed_dofs) rhs[f] = 0.0;
    return rhs;
}

Vector eigenvalue_sensitivity(const StructuredMesh& mesh, const ElementKernel& kernel, const SimpLaw& law,
                              const StressSimpLaw& sigma_law, std::span<const double> rho, std::span<const double> u,
                              std::span<const double> phi, double lambda, std::span<const double> v) {
    Vector d(rho.size(), 0.0);
    const Eigen::MatrixXd& ke = kernel.unit_stiffness();
    std::vector<Index> dofs(mesh.dofs_per_element());
    for (Index e = 0; e < mesh.element_count(); ++e) {
        const Eigen::VectorXd ue = gather(mesh, u, e, dofs);
        const Eigen::VectorXd pe = gather(mesh, phi, e, dofs);
        const Eigen::VectorXd ve = gather(mesh, v, e, dofs);
        const double de = simp_modulus_derivative(law, rho[e]);
        const double ds = stress_simp_modulus_derivative(sigma_law, rho[e]);
        double geo = 0.0;
        if (ds != 0.0) {
            const Eigen::MatrixXd g = kernel.stress_stiffness({ue.data(), static_cast<std::size_t>(ue.size())}, 1.0);
            geo = ds * pe.dot(g * pe);
        }
        d[e] = geo - lambda * de * pe.dot(ke * pe) - de * ve.dot(ke * ue);
    }
    return d;
}

double pnorm_aggregate(std::span<const double> lambdas, double p) {
    double s = 0.0;
    for (double l : lambdas) s += std::pow(l, p);
    return std::pow(s, 1.0 / p);
}

Vector pnorm_weights(std::span<const double> lambdas, double p) {
    const double f = pnorm_aggregate(lambdas, p);
    Vector w(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) w[i] = std::pow(f, 1.0 - p) * std::pow(lambdas[i], p - 1.0);
    return w;
}

StabilityEvaluation stability_objective_and_sensitivity(
    const StructuredMesh& mesh, const ElementKernel& kernel, const BoundaryConditions& bc,
    const FilterOperator& filter, const SimpLaw& law, const StressSimpLaw& sigma_law, std::span<const double> rho,
    std::span<const double> u, const SparseMatrix& k, const LinearOperator& eig_preconditioner,
    const AdjointSolver& adjoint_solver, const DavidsonConfig& eig_cfg, const std::vector<Vector>& initial_space) {
    StabilityEvaluation out;
    const Vector es = element_sigma_moduli(sigma_law, rho);
    const SparseMatrix ks = assemble_stress_stiffness(mesh, bc, u, es, kernel);

    auto t0 = std::chrono::steady_clock::now();
    const EigenResult eig = generalized_davidson(ks, k, eig_preconditioner, eig_cfg, initial_space);
    out.eig_seconds = seconds_since(t0);
    out.eig_iterations = eig.iterations;
    out.eigenvectors = eig.eigenvectors;

    std::vector<std::size_t> modes;
    for (std::size_t i = 0; i < eig.eigenvalues.size(); ++i) {
        if (eig.converged[i]) modes.push_back(i);
    }
    out.partial = static_cast<int>(modes.size()) < eig_cfg.n_modes;
    if (modes.empty()) throw std::runtime_error("stability: no eigenpair converged");
    out.converged_modes = static_cast<int>(modes.size());
    for (std::size_t i : modes) out.eigenvalues.push_back(eig.eigenvalues[i]);

    out.eval.objective = pnorm_aggregate(out.eigenvalues);
    const Vector w = pnorm_weights(out.eigenvalues);
    out.eval.d_rho.assign(rho.size(), 0.0);
    double solve_time = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const Vector& phi = eig.eigenvectors[modes[m]];
        const Vector rhs = adjoint_rhs(mesh, kernel, bc, phi, es);
        auto [v, rec] = adjoint_solver(rhs);
        out.adjoint_iterations += rec.iterations;
        solve_time += rec.solve_time;
        const Vector dl = eigenvalue_sensitivity(mesh, kernel, law, sigma_law, rho, u, phi, out.eigenvalues[m], v);
        axpy(w[m], dl, out.eval.d_rho);
    }
    out.adjoint_seconds = solve_time;
    out.eval.d_alpha = filter.apply_transpose(out.eval.d_rho);
    return out;
}

}  // namespace topomg
