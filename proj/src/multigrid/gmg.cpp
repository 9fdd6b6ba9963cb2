#include <chrono>
#include <stdexcept>

#include "topomg/multigrid.hpp"

namespace topomg {

namespace {

Index dof_count(const std::vector<Index>& dims, int dpn) {
    Index n = dpn;
    for (Index d : dims) n *= d + 1;
    return n;
}

bool coarsenable(const std::vector<Index>& dims) {
    for (Index d : dims) {
        if (d < 2) return false;
    }
    return true;
}

// Fine node index of coarse node c along an axis with n fine elements.
Index coincident_fine(Index c, Index n) { return std::min<Index>(2 * c, n); }

// 1D interpolation: for each fine node, (coarse node, weight) pairs.
std::vector<std::vector<std::pair<Index, double>>> interpolation_1d(Index n) {
    const Index m = (n + 1) / 2;  // coarse elements
    std::vector<std::vector<std::pair<Index, double>>> w(n + 1);
    for (Index i = 0; i <= n; ++i) {
        if (i == n) {
            w[i] = {{m, 1.0}};
        } else if (i % 2 == 0) {
            w[i] = {{i / 2, 1.0}};
        } else {
            const Index c = (i - 1) / 2;
            w[i] = {{c, 0.5}, {c + 1, 0.5}};
        }
    }
    return w;
}

}  // namespace

std::vector<Index> coarsen_dims(const std::vector<Index>& dims) {
    std::vector<Index> out(dims.size());
    for (std::size_t a = 0; a < dims.size(); ++a) out[a] = (dims[a] + 1) / 2;
    return out;
}

std::vector<std::vector<Index>> plan_gmg_levels(const std::vector<Index>& dims, int dofs_per_node,
                                                Index coarse_max_dofs, int max_levels) {
    std::vector<std::vector<Index>> plan{dims};
    while (static_cast<int>(plan.size()) < max_levels && dof_count(plan.back(), dofs_per_node) > coarse_max_dofs &&
           coarsenable(plan.back())) {
        plan.push_back(coarsen_dims(plan.back()));
    }
    return plan;
}

SparseMatrix geometric_prolongation(const std::vector<Index>& fine_dims, int dofs_per_node) {
    const int dim = static_cast<int>(fine_dims.size());
    const auto coarse_dims = coarsen_dims(fine_dims);
    std::vector<std::vector<std::vector<std::pair<Index, double>>>> w1;
    for (int a = 0; a < dim; ++a) w1.push_back(interpolation_1d(fine_dims[a]));
    const Index fnx = fine_dims[0] + 1, fny = fine_dims[1] + 1, fnz = dim == 3 ? fine_dims[2] + 1 : 1;
    const Index cnx = coarse_dims[0] + 1, cny = coarse_dims[1] + 1;
    const Index fine_nodes = fnx * fny * fnz;
    const Index coarse_nodes = dof_count(coarse_dims, 1);

    TripletBuilder tb(fine_nodes * dofs_per_node, coarse_nodes * dofs_per_node);
    tb.reserve(static_cast<std::size_t>(fine_nodes) * dofs_per_node * (dim == 2 ? 4 : 8));
    const std::vector<std::pair<Index, double>> unit{{0, 1.0}};
    for (Index k = 0; k < fnz; ++k) {
        const auto& wz = dim == 3 ? w1[2][k] : unit;
        for (Index j = 0; j < fny; ++j) {
            for (Index i = 0; i < fnx; ++i) {
                const Index fnode = i + fnx * (j + fny * k);
                for (const auto& [cz, vz] : wz) {
                    for (const auto& [cy, vy] : w1[1][j]) {
                        for (const auto& [cx, vx] : w1[0][i]) {
                            const Index cnode = cx + cnx * (cy + cny * cz);
                            const double v = vx * vy * vz;
                            for (int c = 0; c < dofs_per_node; ++c) {
                                tb.add(fnode * dofs_per_node + c, cnode * dofs_per_node + c, v);
                            }
                        }
                    }
                }
            }
        }
    }
    return tb.build();
}

Eigen::MatrixXd inject_to_coarse(const std::vector<Index>& fine_dims, int dofs_per_node, const Eigen::MatrixXd& fine) {
    const int dim = static_cast<int>(fine_dims.size());
    const auto cd = coarsen_dims(fine_dims);
    const Index fnx = fine_dims[0] + 1, fny = fine_dims[1] + 1;
    const Index cnx = cd[0] + 1, cny = cd[1] + 1, cnz = dim == 3 ? cd[2] + 1 : 1;
    Eigen::MatrixXd out(cnx * cny * cnz * dofs_per_node, fine.cols());
    for (Index k = 0; k < cnz; ++k) {
        const Index fk = dim == 3 ? coincident_fine(k, fine_dims[2]) : 0;
        for (Index j = 0; j < cny; ++j) {
            const Index fj = coincident_fine(j, fine_dims[1]);
            for (Index i = 0; i < cnx; ++i) {
                const Index fi = coincident_fine(i, fine_dims[0]);
                const Index cnode = i + cnx * (j + cny * k);
                const Index fnode = fi + fnx * (fj + fny * fk);
                for (int c = 0; c < dofs_per_node; ++c) {
                    out.row(cnode * dofs_per_node + c) = fine.row(fnode * dofs_per_node + c);
                }
            }
        }
    }
    return out;
}

namespace detail {

// Appends geometric levels to h until `n_geo` transfers, the coarse bound, or
// the grid stops being coarsenable. Returns the dims of the last level.
std::vector<Index> append_geometric_levels(MgHierarchy& h, const StructuredMesh& mesh,
                                           std::shared_ptr<const SparseMatrix> k, int n_geo) {
    const int dpn = mesh.dofs_per_node();
    auto dims = mesh.dims();
    MgLevel fine;
    fine.op = std::move(k);
    fine.provenance = Provenance::geometric;
    fine.block_ptr = uniform_blocks(fine.op->rows(), dpn);
    fine.grid_dims = dims;
    h.levels.push_back(std::move(fine));
    int transfers = 0;
    while (transfers < n_geo && static_cast<int>(h.levels.size()) < h.options.max_levels &&
           h.levels.back().size() > h.options.coarse_max_dofs && coarsenable(dims)) {
        auto& cur = h.levels.back();
        cur.prolongation = geometric_prolongation(dims, dpn);
        cur.provenance = Provenance::geometric;
        MgLevel next;
        next.op = std::make_shared<const SparseMatrix>(galerkin_product(*cur.op, cur.prolongation));
        next.provenance = Provenance::geometric;
        dims = coarsen_dims(dims);
        next.grid_dims = dims;
        next.block_ptr = uniform_blocks(next.op->rows(), dpn);
        h.levels.push_back(std::move(next));
        ++transfers;
    }
    return dims;
}

}  // namespace detail

MgHierarchy build_gmg(const StructuredMesh& mesh, std::shared_ptr<const SparseMatrix> k, const MgOptions& options) {
    if (!k || k->rows() != mesh.dof_count()) throw std::invalid_argument("build_gmg: operator does not match mesh");
    const auto t0 = std::chrono::steady_clock::now();
    MgHierarchy h;
    h.options = options;
    detail::append_geometric_levels(h, mesh, std::move(k), options.max_levels);
    h.truncated = h.coarse_size() > options.coarse_max_dofs;
    h.finalize();
    h.setup_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return h;
}

}  // namespace topomg
