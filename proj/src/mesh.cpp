#include "topomg/mesh.hpp"

#include <algorithm>
#include <stdexcept>

namespace topomg {

StructuredMesh::StructuredMesh(std::vector<Index> dims, std::vector<double> element_size)
    : dims_(std::move(dims)), element_size_(std::move(element_size)) {
    if (dims_.size() < 2 || dims_.size() > 3) throw std::invalid_argument("mesh: dims must have 2 or 3 entries");
    if (dims_.size() != element_size_.size()) {
        throw std::invalid_argument("mesh: dims and element_size differ in length");
    }
    node_count_ = 1;
    element_count_ = 1;
    for (std::size_t a = 0; a < dims_.size(); ++a) {
        if (dims_[a] < 1) throw std::invalid_argument("mesh: element counts must be >= 1");
        if (!(element_size_[a] > 0.0)) throw std::invalid_argument("mesh: element sizes must be > 0");
        node_count_ *= dims_[a] + 1;
        element_count_ *= dims_[a];
    }
}

double StructuredMesh::element_volume() const {
    double v = 1.0;
    for (double h : element_size_) v *= h;
    return v;
}

std::array<Index, 3> StructuredMesh::node_grid(Index node) const {
    const Index nx = nodes_along(0);
    const Index ny = nodes_along(1);
    return {node % nx, (node / nx) % ny, node / (nx * ny)};
}

std::array<double, 3> StructuredMesh::node_coords(Index node) const {
    const auto g = node_grid(node);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim(); ++a) x[a] = g[a] * element_size_[a];
    return x;
}

std::array<Index, 3> StructuredMesh::element_grid(Index e) const {
    const Index nx = dims_[0];
    const Index ny = dims_[1];
    return {e % nx, (e / nx) % ny, e / (nx * ny)};
}

std::array<double, 3> StructuredMesh::element_centroid(Index e) const {
    const auto g = element_grid(e);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim(); ++a) x[a] = (g[a] + 0.5) * element_size_[a];
    return x;
}

std::array<Index, 8> StructuredMesh::element_nodes(Index e) const {
    const auto [i, j, k] = element_grid(e);
    std::array<Index, 8> n{};
    n[0] = node_index(i, j, k);
    n[1] = node_index(i + 1, j, k);
    n[2] = node_index(i + 1, j + 1, k);
    n[3] = node_index(i, j + 1, k);
    if (dim() == 3) {
        n[4] = node_index(i, j, k + 1);
        n[5] = node_index(i + 1, j, k + 1);
        n[6] = node_index(i + 1, j + 1, k + 1);
        n[7] = node_index(i, j + 1, k + 1);
    }
    return n;
}

void StructuredMesh::element_dofs(Index e, std::span<Index> out) const {
    const auto nodes = element_nodes(e);
    const int dpn = dofs_per_node();
    for (int a = 0; a < nodes_per_element(); ++a) {
        for (int c = 0; c < dpn; ++c) out[a * dpn + c] = nodes[a] * dpn + c;
    }
}

std::vector<Index> StructuredMesh::element_dofs(Index e) const {
    std::vector<Index> d(dofs_per_element());
    element_dofs(e, d);
    return d;
}

StructuredMesh build_mesh(const std::vector<Index>& dims, const std::vector<double>& element_size) {
    return StructuredMesh(dims, element_size);
}

std::vector<char> BoundaryConditions::fixed_mask(Index dof_count) const {
    std::vector<char> mask(dof_count, 0);
    for (Index d : fixed_dofs) {
        if (d < 0 || d >= dof_count) throw std::out_of_range("boundary conditions: fixed dof out of range");
        mask[d] = 1;
    }
    return mask;
}

void BoundaryConditions::finalize() {
    std::sort(fixed_dofs.begin(), fixed_dofs.end());
    fixed_dofs.erase(std::unique(fixed_dofs.begin(), fixed_dofs.end()), fixed_dofs.end());
    for (Index d : fixed_dofs) {
        if (d < 0 || static_cast<std::size_t>(d) >= load.size()) {
            throw std::out_of_range("boundary conditions: fixed dof out of range");
        }
        load[d] = 0.0;
    }
}

}  // namespace topomg
