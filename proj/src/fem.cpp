#include "topomg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace topomg {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

// Reference-node signs for Q4 / Hex8 in the mesh's local ordering.
constexpr int kSign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                             {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

Eigen::MatrixXd constitutive_matrix(int dim, double nu) {
    if (dim == 2) {
        Eigen::MatrixXd d(3, 3);
        const double c = 1.0 / (1.0 - nu * nu);
        d << c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0;
        return d;
    }
    const double lambda = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = 1.0 / (2.0 * (1.0 + nu));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) d(i, j) = lambda;
        d(i, i) += 2.0 * mu;
        d(i + 3, i + 3) = mu;
    }
    return d;
}

}  // namespace

ElementKernel::ElementKernel(const StructuredMesh& mesh, double nu) : dim_(mesh.dim()), nu_(nu) {
    if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("element kernel: Poisson ratio must be in [0, 0.5)");
    const int nnode = mesh.nodes_per_element();
    const int ndof = nnode * dim_;
    const int nvoigt = dim_ == 2 ? 3 : 6;
    const auto& h = mesh.element_size();
    constitutive_ = constitutive_matrix(dim_, nu);
    unit_stiffness_ = Eigen::MatrixXd::Zero(ndof, ndof);

    double det = 1.0;
    for (int a = 0; a < dim_; ++a) det *= h[a] / 2.0;

    const int ngp = dim_ == 2 ? 4 : 8;
    for (int g = 0; g < ngp; ++g) {
        const double xi[3] = {kSign[g][0] * kGauss, kSign[g][1] * kGauss, kSign[g][2] * kGauss};
        // Physical shape-function derivatives dN_a/dx_d.
        Eigen::MatrixXd dn(nnode, dim_);
        for (int a = 0; a < nnode; ++a) {
            for (int d = 0; d < dim_; ++d) {
                double v = kSign[a][d] * 0.5;
                for (int o = 0; o < dim_; ++o) {
                    if (o != d) v *= 0.5 * (1.0 + kSign[a][o] * xi[o]);
                }
                dn(a, d) = v * 2.0 / h[d];
            }
        }
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nvoigt, ndof);
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(dim_ * dim_, ndof);
        for (int a = 0; a < nnode; ++a) {
            const int c0 = a * dim_;
            if (dim_ == 2) {
                b(0, c0) = dn(a, 0);
                b(1, c0 + 1) = dn(a, 1);
                b(2, c0) = dn(a, 1);
                b(2, c0 + 1) = dn(a, 0);
            } else {
                b(0, c0) = dn(a, 0);
                b(1, c0 + 1) = dn(a, 1);
                b(2, c0 + 2) = dn(a, 2);
                b(3, c0 + 1) = dn(a, 2);
                b(3, c0 + 2) = dn(a, 1);
                b(4, c0) = dn(a, 2);
                b(4, c0 + 2) = dn(a, 0);
                b(5, c0) = dn(a, 1);
                b(5, c0 + 1) = dn(a, 0);
            }
            for (int c = 0; c < dim_; ++c) {
                for (int d = 0; d < dim_; ++d) grad(c * dim_ + d, c0 + c) = dn(a, d);
            }
        }
        unit_stiffness_ += det * b.transpose() * constitutive_ * b;
        strain_.push_back(std::move(b));
        gradient_.push_back(std::move(grad));
        weight_.push_back(det);
    }
    unit_stiffness_ = 0.5 * (unit_stiffness_ + unit_stiffness_.transpose());
}

std::vector<Eigen::VectorXd> ElementKernel::gauss_stresses(std::span<const double> ue, double e_sigma) const {
    const Eigen::Map<const Eigen::VectorXd> u(ue.data(), static_cast<Eigen::Index>(ue.size()));
    std::vector<Eigen::VectorXd> out;
    out.reserve(strain_.size());
    for (const auto& b : strain_) out.push_back(e_sigma * (constitutive_ * (b * u)));
    return out;
}

Eigen::MatrixXd ElementKernel::stress_stiffness(std::span<const double> ue, double e_sigma) const {
    const int ndof = dofs();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ndof, ndof);
    if (e_sigma == 0.0) return k;
    const auto stresses = gauss_stresses(ue, e_sigma);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim_ * dim_, dim_ * dim_);
    for (std::size_t g = 0; g < strain_.size(); ++g) {
        const auto& sig = stresses[g];
        Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
        if (dim_ == 2) {
            t(0, 0) = sig(0);
            t(1, 1) = sig(1);
            t(0, 1) = t(1, 0) = sig(2);
        } else {
            t(0, 0) = sig(0);
            t(1, 1) = sig(1);
            t(2, 2) = sig(2);
            t(1, 2) = t(2, 1) = sig(3);
            t(0, 2) = t(2, 0) = sig(4);
            t(0, 1) = t(1, 0) = sig(5);
        }
        for (int c = 0; c < dim_; ++c) s.block(c * dim_, c * dim_, dim_, dim_) = t.topLeftCorner(dim_, dim_);
        k -= weight_[g] * gradient_[g].transpose() * s * gradient_[g];
    }
    return 0.5 * (k + k.transpose());
}

Eigen::VectorXd ElementKernel::stress_stiffness_gradient(std::span<const double> phi_e, double e_sigma) const {
    const int ndof = dofs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(ndof);
    if (e_sigma == 0.0) return out;
    const Eigen::Map<const Eigen::VectorXd> phi(phi_e.data(), ndof);
    for (std::size_t g = 0; g < strain_.size(); ++g) {
        const Eigen::VectorXd grad = gradient_[g] * phi;
        // m_dd' = sum_c grad_{c,d} grad_{c,d'} in Voigt form (shear doubled).
        Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
        for (int c = 0; c < dim_; ++c) {
            for (int d = 0; d < dim_; ++d) {
                for (int e = 0; e < dim_; ++e) m(d, e) += grad(c * dim_ + d) * grad(c * dim_ + e);
            }
        }
        Eigen::VectorXd mv(dim_ == 2 ? 3 : 6);
        if (dim_ == 2) {
            mv << m(0, 0), m(1, 1), 2.0 * m(0, 1);
        } else {
            mv << m(0, 0), m(1, 1), m(2, 2), 2.0 * m(1, 2), 2.0 * m(0, 2), 2.0 * m(0, 1);
        }
        out -= weight_[g] * e_sigma * strain_[g].transpose() * (constitutive_ * mv);
    }
    return out;
}

Eigen::MatrixXd element_stiffness(const StructuredMesh& mesh, double e, double nu) {
    if (!(e > 0.0)) throw std::invalid_argument("element_stiffness: modulus must be > 0");
    return e * ElementKernel(mesh, nu).unit_stiffness();
}

SparseMatrix stiffness_pattern(const StructuredMesh& mesh) {
    const int dim = mesh.dim();
    const int dpn = mesh.dofs_per_node();
    const Index n = mesh.dof_count();
    std::vector<std::size_t> ptr(n + 1, 0);
    std::vector<Index> cols;
    const int per_row = dim == 2 ? 9 * dpn : 27 * dpn;
    cols.reserve(static_cast<std::size_t>(n) * per_row);
    const Index nx = mesh.nodes_along(0), ny = mesh.nodes_along(1), nz = mesh.nodes_along(2);
    for (Index node = 0; node < mesh.node_count(); ++node) {
        const auto g = mesh.node_grid(node);
        std::vector<Index> nbrs;
        for (Index dk = (dim == 3 ? -1 : 0); dk <= (dim == 3 ? 1 : 0); ++dk) {
            const Index k = g[2] + dk;
            if (k < 0 || k >= nz) continue;
            for (Index dj = -1; dj <= 1; ++dj) {
                const Index j = g[1] + dj;
                if (j < 0 || j >= ny) continue;
                for (Index di = -1; di <= 1; ++di) {
                    const Index i = g[0] + di;
                    if (i < 0 || i >= nx) continue;
                    nbrs.push_back(mesh.node_index(i, j, k));
                }
            }
        }
        // nbrs is already ascending (k, j, i loops in lexicographic order).
        for (int c = 0; c < dpn; ++c) {
            const Index row = node * dpn + c;
            for (Index m : nbrs) {
                for (int cc = 0; cc < dpn; ++cc) cols.push_back(m * dpn + cc);
            }
            ptr[row + 1] = cols.size();
        }
    }
    std::vector<double> vals(cols.size(), 0.0);
    return SparseMatrix(n, n, std::move(ptr), std::move(cols), std::move(vals));
}

namespace {

template <class ElementMatrix>
SparseMatrix assemble(const StructuredMesh& mesh, ElementMatrix&& element_matrix) {
    SparseMatrix a = stiffness_pattern(mesh);
    auto vals = a.values();
    const int nd = mesh.dofs_per_element();
    std::vector<Index> dofs(nd);
    for (Index e = 0; e < mesh.element_count(); ++e) {
        mesh.element_dofs(e, dofs);
        const Eigen::MatrixXd ke = element_matrix(e, std::span<const Index>(dofs));
        if (ke.size() == 0) continue;
        for (int i = 0; i < nd; ++i) {
            for (int j = 0; j < nd; ++j) vals[a.find(dofs[i], dofs[j])] += ke(i, j);
        }
    }
    return a;
}

}  // namespace

void apply_dirichlet(SparseMatrix& a, const std::vector<Index>& fixed_dofs, double diag_value) {
    if (fixed_dofs.empty()) return;
    std::vector<char> fixed(a.rows(), 0);
    for (Index d : fixed_dofs) fixed[d] = 1;
    const auto ptr = a.row_ptr();
    const auto cols = a.col_idx();
    auto vals = a.values();
    for (Index r = 0; r < a.rows(); ++r) {
        for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) {
            if (fixed[r] || fixed[cols[k]]) vals[k] = (r == cols[k]) ? diag_value : 0.0;
        }
    }
}

SparseMatrix assemble_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                std::span<const double> element_moduli, const ElementKernel& kernel) {
    if (element_moduli.size() != static_cast<std::size_t>(mesh.element_count())) {
        throw std::invalid_argument("assemble_stiffness: element_moduli length != element count");
    }
    const Eigen::MatrixXd& k0 = kernel.unit_stiffness();
    SparseMatrix k = stiffness_pattern(mesh);
    auto vals = k.values();
    const int nd = mesh.dofs_per_element();
    std::vector<Index> dofs(nd);
    std::vector<std::size_t> pos(static_cast<std::size_t>(nd) * nd);
    // Every element has the same local-to-CSR offset structure up to a shift,
    // but boundary rows differ; look positions up per element.
    for (Index e = 0; e < mesh.element_count(); ++e) {
        const double em = element_moduli[e];
        mesh.element_dofs(e, dofs);
        for (int i = 0; i < nd; ++i) {
            const auto rc = k.row_cols(dofs[i]);
            const std::size_t base = k.row_ptr()[dofs[i]];
            for (int j = 0; j < nd; ++j) {
                const auto it = std::lower_bound(rc.begin(), rc.end(), dofs[j]);
                vals[base + static_cast<std::size_t>(it - rc.begin())] += em * k0(i, j);
            }
        }
    }
    apply_dirichlet(k, bc.fixed_dofs, 1.0);
    return k;
}

SparseMatrix assemble_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                std::span<const double> element_moduli, double nu) {
    return assemble_stiffness(mesh, bc, element_moduli, ElementKernel(mesh, nu));
}

SparseMatrix assemble_stress_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                       std::span<const double> u, std::span<const double> element_sigma_moduli,
                                       const ElementKernel& kernel) {
    if (u.size() != static_cast<std::size_t>(mesh.dof_count())) {
        throw std::invalid_argument("assemble_stress_stiffness: displacement length != dof count");
    }
    if (element_sigma_moduli.size() != static_cast<std::size_t>(mesh.element_count())) {
        throw std::invalid_argument("assemble_stress_stiffness: modulus length != element count");
    }
    std::vector<double> ue(mesh.dofs_per_element());
    SparseMatrix ks = assemble(mesh, [&](Index e, std::span<const Index> dofs) -> Eigen::MatrixXd {
        if (element_sigma_moduli[e] == 0.0) return {};
        for (std::size_t i = 0; i < dofs.size(); ++i) ue[i] = u[dofs[i]];
        return kernel.stress_stiffness(ue, element_sigma_moduli[e]);
    });
    apply_dirichlet(ks, bc.fixed_dofs, 0.0);
    return ks;
}

SparseMatrix assemble_stress_stiffness(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                       std::span<const double> u, std::span<const double> element_sigma_moduli,
                                       double nu) {
    return assemble_stress_stiffness(mesh, bc, u, element_sigma_moduli, ElementKernel(mesh, nu));
}

std::vector<Vector> rigid_body_modes(const StructuredMesh& mesh, const std::vector<Index>& fixed_dofs) {
    const int dim = mesh.dim();
    const int dpn = mesh.dofs_per_node();
    const Index n = mesh.dof_count();
    std::array<double, 3> centre{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) centre[a] = 0.5 * mesh.dims()[a] * mesh.element_size()[a];
    const int nmodes = dim == 2 ? 3 : 6;
    std::vector<Vector> modes(nmodes, Vector(n, 0.0));
    for (Index node = 0; node < mesh.node_count(); ++node) {
        auto x = mesh.node_coords(node);
        for (int a = 0; a < dim; ++a) x[a] -= centre[a];
        const Index d = node * dpn;
        for (int c = 0; c < dim; ++c) modes[c][d + c] = 1.0;
        if (dim == 2) {
            modes[2][d] = -x[1];
            modes[2][d + 1] = x[0];
        } else {
            // rotations about x, y, z
            modes[3][d + 1] = -x[2];
            modes[3][d + 2] = x[1];
            modes[4][d] = x[2];
            modes[4][d + 2] = -x[0];
            modes[5][d] = -x[1];
            modes[5][d + 1] = x[0];
        }
    }
    for (auto& m : modes) {
        for (Index f : fixed_dofs) m[f] = 0.0;
    }
    return modes;
}

FilterOperator build_filter(const StructuredMesh& mesh, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("build_filter: radius must be > 0");
    const int dim = mesh.dim();
    const auto& dims = mesh.dims();
    const auto& h = mesh.element_size();
    double href = h[0];
    for (double v : h) href = std::min(href, v);
    std::array<Index, 3> reach{0, 0, 0};
    for (int a = 0; a < dim; ++a) reach[a] = static_cast<Index>(std::ceil(radius * href / h[a]));

    TripletBuilder tb(mesh.element_count(), mesh.element_count());
    for (Index e = 0; e < mesh.element_count(); ++e) {
        const auto g = mesh.element_grid(e);
        std::vector<std::pair<Index, double>> row;
        double sum = 0.0;
        const Index k0 = dim == 3 ? std::max<Index>(0, g[2] - reach[2]) : 0;
        const Index k1 = dim == 3 ? std::min<Index>(dims[2] - 1, g[2] + reach[2]) : 0;
        for (Index k = k0; k <= k1; ++k) {
            for (Index j = std::max<Index>(0, g[1] - reach[1]); j <= std::min<Index>(dims[1] - 1, g[1] + reach[1]); ++j) {
                for (Index i = std::max<Index>(0, g[0] - reach[0]); i <= std::min<Index>(dims[0] - 1, g[0] + reach[0]);
                     ++i) {
                    const double dx = (i - g[0]) * h[0] / href;
                    const double dy = (j - g[1]) * h[1] / href;
                    const double dz = dim == 3 ? (k - g[2]) * h[2] / href : 0.0;
                    const double w = radius - std::sqrt(dx * dx + dy * dy + dz * dz);
                    if (w <= 0.0) continue;
                    row.emplace_back(mesh.element_index(i, j, k), w);
                    sum += w;
                }
            }
        }
        for (const auto& [c, w] : row) tb.add(e, c, w / sum);
    }
    return FilterOperator{tb.build(), radius};
}

}  // namespace topomg
