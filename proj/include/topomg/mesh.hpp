#pragma once

#include <array>
#include <vector>

#include "topomg/sparse_matrix.hpp"

namespace topomg {

/// Uniform Q4 (2D) or Hex8 (3D) grid. Nodes are numbered lexicographically
/// with x fastest; element e at grid position (i, j, k) owns local nodes in
/// counterclockwise order on the bottom face, then the top face (3D).
class StructuredMesh {
public:
    StructuredMesh() = default;
    StructuredMesh(std::vector<Index> dims, std::vector<double> element_size);

    [[nodiscard]] int dim() const { return static_cast<int>(dims_.size()); }
    [[nodiscard]] const std::vector<Index>& dims() const { return dims_; }
    [[nodiscard]] const std::vector<double>& element_size() const { return element_size_; }
    [[nodiscard]] int dofs_per_node() const { return dim(); }
    [[nodiscard]] int nodes_per_element() const { return dim() == 2 ? 4 : 8; }
    [[nodiscard]] int dofs_per_element() const { return nodes_per_element() * dofs_per_node(); }

    [[nodiscard]] Index nodes_along(int axis) const { return axis < dim() ? dims_[axis] + 1 : 1; }
    [[nodiscard]] Index node_count() const { return node_count_; }
    [[nodiscard]] Index element_count() const { return element_count_; }
    [[nodiscard]] Index dof_count() const { return node_count_ * dofs_per_node(); }
    [[nodiscard]] double element_volume() const;

    [[nodiscard]] Index node_index(Index i, Index j, Index k = 0) const {
        return i + nodes_along(0) * (j + nodes_along(1) * k);
    }
    [[nodiscard]] std::array<Index, 3> node_grid(Index node) const;
    [[nodiscard]] std::array<double, 3> node_coords(Index node) const;

    [[nodiscard]] Index element_index(Index i, Index j, Index k = 0) const {
        return i + dims_[0] * (j + dims_[1] * k);
    }
    [[nodiscard]] std::array<Index, 3> element_grid(Index e) const;
    [[nodiscard]] std::array<double, 3> element_centroid(Index e) const;
    /// Global node ids of element e (first nodes_per_element() entries used).
    [[nodiscard]] std::array<Index, 8> element_nodes(Index e) const;
    /// Global dof ids of element e, node-major.
    [[nodiscard]] std::vector<Index> element_dofs(Index e) const;
    void element_dofs(Index e, std::span<Index> out) const;

private:
    std::vector<Index> dims_;
    std::vector<double> element_size_;
    Index node_count_ = 0;
    Index element_count_ = 0;
};

[[nodiscard]] StructuredMesh build_mesh(const std::vector<Index>& dims, const std::vector<double>& element_size);

/// Dirichlet dofs and nodal loads.
struct BoundaryConditions {
    std::vector<Index> fixed_dofs;  // sorted, unique
    Vector load;

    [[nodiscard]] std::vector<char> fixed_mask(Index dof_count) const;
    /// Sort/deduplicate fixed dofs and zero the load on them.
    void finalize();
};

}  // namespace topomg
