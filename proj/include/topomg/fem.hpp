#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topomg/mesh.hpp"
#include "topomg/sparse_matrix.hpp"

namespace topomg {

/// Per-mesh element quantities shared by all elements of a uniform grid:
/// unit-modulus stiffness, strain-displacement matrices and displacement
/// gradient operators at the Gauss points. 2D is plane stress, unit thickness.
class ElementKernel {
public:
    ElementKernel(const StructuredMesh& mesh, double nu);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] double nu() const { return nu_; }
    [[nodiscard]] int dofs() const { return static_cast<int>(unit_stiffness_.rows()); }
    /// Element stiffness for E = 1.
    [[nodiscard]] const Eigen::MatrixXd& unit_stiffness() const { return unit_stiffness_; }

    /// Stress stiffness of one element for displacement ue and stress modulus
    /// e_sigma. Sign convention: compressive prestress yields positive
    /// eigenvalues of K_sigma phi = lambda K phi (lambda = 1 / load factor).
    [[nodiscard]] Eigen::MatrixXd stress_stiffness(std::span<const double> ue, double e_sigma) const;

    /// d/d(ue_j) of phi^T K_sigma,e(ue) phi for all element dofs j.
    [[nodiscard]] Eigen::VectorXd stress_stiffness_gradient(std::span<const double> phi_e, double e_sigma) const;

    /// Stress (Voigt: xx, yy, xy or xx, yy, zz, yz, xz, xy) at each Gauss point.
    [[nodiscard]] std::vector<Eigen::VectorXd> gauss_stresses(std::span<const double> ue, double e_sigma) const;

private:
    int dim_;
    double nu_;
    Eigen::MatrixXd constitutive_;  // unit-modulus D
    Eigen::MatrixXd unit_stiffness_;
    std::vector<Eigen::MatrixXd> strain_;    // B at each Gauss point
    std::vector<Eigen::MatrixXd> gradient_;  // G: ue -> displacement gradient (component-major)
    std::vector<double> weight_;             // quadrature weight * det J
};

/// Element stiffness for modulus e and Poisson ratio nu.
[[nodiscard]] Eigen::MatrixXd element_stiffness(const StructuredMesh& mesh, double e, double nu);

/// Zero-valued matrix holding the nodal-neighbour pattern of the mesh.
[[nodiscard]] SparseMatrix stiffness_pattern(const StructuredMesh& mesh);

/// Global K = sum_e E_e k_e with fixed dofs eliminated (unit diagonal).
[[nodiscard]] SparseMatrix assemble_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                              std::span<const double> element_moduli, double nu = 0.3);
[[nodiscard]] SparseMatrix assemble_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                              std::span<const double> element_moduli, const ElementKernel& kernel);

/// Global stress stiffness for displacement u; fixed dofs eliminated with a
/// zero diagonal so they contribute only lambda = 0 modes.
[[nodiscard]] SparseMatrix assemble_stress_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                                     std::span<const double> u,
                                                     std::span<const double> element_sigma_moduli,
                                                     const ElementKernel& kernel);
[[nodiscard]] SparseMatrix assemble_stress_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                                     std::span<const double> u,
                                                     std::span<const double> element_sigma_moduli, double nu = 0.3);

/// Symmetric elimination of fixed dofs in place: rows and columns zeroed,
/// diagonal set to diag_value.
void apply_dirichlet(SparseMatrix& a, const std::vector<Index>& fixed_dofs, double diag_value);

/// Rigid body modes (2D: 3, 3D: 6) at the mesh nodes, centred on the domain,
/// zeroed on fixed dofs.
[[nodiscard]] std::vector<Vector> rigid_body_modes(const StructuredMesh& mesh, const std::vector<Index>& fixed_dofs);

/// Density filter rho = S alpha with linear hat weights.
struct FilterOperator {
    SparseMatrix matrix;
    double radius = 0.0;  // in element-size units

    [[nodiscard]] Vector apply(std::span<const double> alpha) const { return matrix.multiply(alpha); }
    [[nodiscard]] Vector apply_transpose(std::span<const double> g) const { return matrix.multiply_transpose(g); }
};

[[nodiscard]] FilterOperator build_filter(const StructuredMesh& mesh, double radius);

}  // namespace topomg
