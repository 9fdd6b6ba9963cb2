#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "topomg/multigrid.hpp"

namespace topomg {

namespace detail {
std::vector<Index> append_geometric_levels(MgHierarchy& h, const StructuredMesh& mesh,
                                           std::shared_ptr<const SparseMatrix> k, int n_geo);
}

std::vector<Index> uniform_blocks(Index dofs, int block_size) {
    if (block_size < 1 || dofs % block_size != 0) throw std::invalid_argument("uniform_blocks: size does not divide dofs");
    std::vector<Index> ptr(dofs / block_size + 1);
    for (std::size_t i = 0; i < ptr.size(); ++i) ptr[i] = static_cast<Index>(i) * block_size;
    return ptr;
}

StrengthGraph strength_of_connection(const SparseMatrix& k, double beta, std::span<const Index> block_ptr) {
    if (block_ptr.empty() || block_ptr.back() != k.rows()) {
        throw std::invalid_argument("strength_of_connection: blocks do not cover the matrix");
    }
    const Index nodes = static_cast<Index>(block_ptr.size()) - 1;
    std::vector<Index> node_of(k.rows());
    for (Index b = 0; b < nodes; ++b) {
        for (Index r = block_ptr[b]; r < block_ptr[b + 1]; ++r) node_of[r] = b;
    }

    // Squared Frobenius norms of every nonzero nodal block, node by node.
    std::vector<std::vector<std::pair<Index, double>>> blocks(nodes);
    std::vector<double> diag(nodes, 0.0);
    std::vector<double> acc(nodes, 0.0);
    std::vector<Index> touched;
    for (Index b = 0; b < nodes; ++b) {
        touched.clear();
        for (Index r = block_ptr[b]; r < block_ptr[b + 1]; ++r) {
            const auto cols = k.row_cols(r);
            const auto vals = k.row_vals(r);
            for (std::size_t q = 0; q < cols.size(); ++q) {
                const Index nb = node_of[cols[q]];
                if (acc[nb] == 0.0 && vals[q] != 0.0) touched.push_back(nb);
                acc[nb] += vals[q] * vals[q];
            }
        }
        for (Index nb : touched) {
            if (nb == b) {
                diag[b] = std::sqrt(acc[nb]);
            } else {
                blocks[b].emplace_back(nb, acc[nb]);
            }
            acc[nb] = 0.0;
        }
        if (diag[b] == 0.0) throw std::invalid_argument("strength_of_connection: zero diagonal block");
    }

    StrengthGraph g;
    g.nodes = nodes;
    g.beta = beta;
    g.ptr.assign(1, 0);
    for (Index b = 0; b < nodes; ++b) {
        auto& row = blocks[b];
        std::sort(row.begin(), row.end());
        for (const auto& [nb, sq] : row) {
            if (sq > beta * diag[b] * diag[nb]) g.adj.push_back(nb);
        }
        g.ptr.push_back(static_cast<Index>(g.adj.size()));
    }
    return g;
}

StrengthGraph strength_of_connection(const SparseMatrix& k, double beta, int block_size) {
    const auto ptr = uniform_blocks(k.rows(), block_size);
    return strength_of_connection(k, beta, ptr);
}

namespace {

Aggregation forced_pairs(Index nodes) {
    Aggregation agg;
    agg.aggregate_of.resize(nodes);
    for (Index i = 0; i < nodes; ++i) agg.aggregate_of[i] = i / 2;
    agg.count = (nodes + 1) / 2;
    agg.forced = true;
    return agg;
}

}  // namespace

Aggregation aggregate(const StrengthGraph& graph) {
    const Index n = graph.nodes;
    Aggregation agg;
    agg.aggregate_of.assign(n, -1);

    // Root nodes whose whole neighbourhood is still free.
    for (Index i = 0; i < n; ++i) {
        const auto nb = graph.neighbours(i);
        if (nb.empty() || agg.aggregate_of[i] != -1) continue;
        bool free = true;
        for (Index j : nb) free = free && agg.aggregate_of[j] == -1;
        if (!free) continue;
        agg.aggregate_of[i] = agg.count;
        for (Index j : nb) agg.aggregate_of[j] = agg.count;
        ++agg.count;
    }

    // Leftovers join the aggregate of their first aggregated neighbour.
    const std::vector<Index> snapshot = agg.aggregate_of;
    for (Index i = 0; i < n; ++i) {
        if (snapshot[i] != -1) continue;
        for (Index j : graph.neighbours(i)) {
            if (snapshot[j] != -1) {
                agg.aggregate_of[i] = snapshot[j];
                break;
            }
        }
    }

    // Anything still free with neighbours starts a new aggregate.
    for (Index i = 0; i < n; ++i) {
        const auto nb = graph.neighbours(i);
        if (nb.empty() || agg.aggregate_of[i] != -1) continue;
        agg.aggregate_of[i] = agg.count;
        for (Index j : nb) {
            if (agg.aggregate_of[j] == -1) agg.aggregate_of[j] = agg.count;
        }
        ++agg.count;
    }

    if (agg.count == 0 && n > 1) return forced_pairs(n);
    return agg;
}

TentativeProlongation tentative_prolongation(const Aggregation& agg, std::span<const Index> block_ptr,
                                             const Eigen::MatrixXd& nullspace) {
    const Index nodes = static_cast<Index>(block_ptr.size()) - 1;
    if (static_cast<Index>(agg.aggregate_of.size()) != nodes) {
        throw std::invalid_argument("tentative_prolongation: aggregation does not match blocks");
    }
    if (nullspace.rows() != block_ptr.back()) throw std::invalid_argument("tentative_prolongation: nullspace rows");
    const Eigen::Index m = nullspace.cols();

    std::vector<std::vector<Index>> members(agg.count);
    for (Index i = 0; i < nodes; ++i) {
        if (agg.aggregate_of[i] >= 0) members[agg.aggregate_of[i]].push_back(i);
    }

    TentativeProlongation out;
    std::vector<Eigen::Triplet<double>> entries;
    std::vector<Eigen::VectorXd> r_rows;
    out.coarse_block_ptr.push_back(0);
    Index coarse = 0;
    for (Index a = 0; a < agg.count; ++a) {
        std::vector<Index> dofs;
        for (Index node : members[a]) {
            for (Index d = block_ptr[node]; d < block_ptr[node + 1]; ++d) dofs.push_back(d);
        }
        const Eigen::Index nd = static_cast<Eigen::Index>(dofs.size());
        Eigen::MatrixXd b(nd, m);
        for (Eigen::Index r = 0; r < nd; ++r) b.row(r) = nullspace.row(dofs[r]);

        // Modified Gram-Schmidt; near-dependent columns are dropped.
        std::vector<Eigen::VectorXd> q;
        Eigen::MatrixXd rfull = Eigen::MatrixXd::Zero(m, m);
        std::vector<Eigen::Index> kept;
        for (Eigen::Index c = 0; c < m; ++c) {
            Eigen::VectorXd v = b.col(c);
            const double original = v.norm();
            for (std::size_t t = 0; t < q.size(); ++t) {
                const double h = q[t].dot(v);
                rfull(static_cast<Eigen::Index>(t), c) = h;
                v -= h * q[t];
            }
            for (std::size_t t = 0; t < q.size(); ++t) {
                const double h = q[t].dot(v);
                rfull(static_cast<Eigen::Index>(t), c) += h;
                v -= h * q[t];
            }
            const double nv = v.norm();
            if (original == 0.0 || nv <= 1e-10 * original) continue;
            rfull(static_cast<Eigen::Index>(q.size()), c) = nv;
            q.push_back(v / nv);
        }
        const Index rank = static_cast<Index>(q.size());
        if (rank == 0) continue;
        for (Index t = 0; t < rank; ++t) {
            for (Eigen::Index r = 0; r < nd; ++r) {
                if (q[t](r) != 0.0) entries.emplace_back(dofs[r], coarse + t, q[t](r));
            }
            r_rows.emplace_back(rfull.row(t).transpose());
        }
        coarse += rank;
        out.coarse_block_ptr.push_back(coarse);
    }

    TripletBuilder tb(block_ptr.back(), coarse);
    tb.reserve(entries.size());
    for (const auto& t : entries) tb.add(static_cast<Index>(t.row()), static_cast<Index>(t.col()), t.value());
    out.p = tb.build();
    out.coarse_nullspace.resize(coarse, m);
    for (Index r = 0; r < coarse; ++r) out.coarse_nullspace.row(r) = r_rows[r].transpose();
    return out;
}

double estimate_dinv_a_radius(const SparseMatrix& a, int steps, std::uint64_t seed) {
    const Index n = a.rows();
    const Vector d = a.diagonal();
    for (double x : d) {
        if (x <= 0.0) throw std::runtime_error("estimate_dinv_a_radius: non-positive diagonal");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n), av(n);
    for (double& x : v) x = dist(rng);
    double rho = 0.0;
    for (int s = 0; s < steps; ++s) {
        double dn = 0.0;
        for (Index i = 0; i < n; ++i) dn += d[i] * v[i] * v[i];
        if (dn == 0.0) break;
        const double inv = 1.0 / std::sqrt(dn);
        for (double& x : v) x *= inv;
        a.multiply(v, av);
        rho = std::max(rho, dot(v, av));  // Rayleigh quotient in the D inner product
        for (Index i = 0; i < n; ++i) v[i] = av[i] / d[i];
    }
    return rho;
}

SparseMatrix smooth_prolongation(const SparseMatrix& a, const SparseMatrix& p_tent, std::uint64_t seed) {
    const double rho = estimate_dinv_a_radius(a, 20, seed);
    if (!(rho > 0.0)) return p_tent;
    const double omega = 4.0 / (3.0 * rho);
    SparseMatrix ap = multiply(a, p_tent);
    const Vector d = a.diagonal();
    auto vals = ap.values();
    const auto ptr = ap.row_ptr();
    for (Index r = 0; r < ap.rows(); ++r) {
        for (std::size_t q = ptr[r]; q < ptr[r + 1]; ++q) vals[q] *= omega / d[r];
    }
    return add(p_tent, ap, 1.0, -1.0).pruned();
}

Eigen::MatrixXd nullspace_matrix(const std::vector<Vector>& modes) {
    if (modes.empty()) return {};
    Eigen::MatrixXd out(static_cast<Eigen::Index>(modes.front().size()), static_cast<Eigen::Index>(modes.size()));
    for (std::size_t c = 0; c < modes.size(); ++c) {
        if (modes[c].size() != modes.front().size()) throw std::invalid_argument("nullspace_matrix: ragged modes");
        for (std::size_t r = 0; r < modes[c].size(); ++r) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = modes[c][r];
    }
    return out;
}

namespace {

// Extends h below its current coarsest level with smoothed-aggregation levels.
void append_algebraic_levels(MgHierarchy& h, Eigen::MatrixXd nullspace) {
    while (static_cast<int>(h.levels.size()) < h.options.max_levels &&
           h.levels.back().size() > h.options.coarse_max_dofs) {
        auto& cur = h.levels.back();
        const SparseMatrix& a = *cur.op;
        const auto graph = strength_of_connection(a, h.options.strength_beta, cur.block_ptr);
        Aggregation agg = aggregate(graph);
        auto tent = tentative_prolongation(agg, cur.block_ptr, nullspace);
        const auto no_progress = [&](const TentativeProlongation& t) {
            return t.p.cols() == 0 || static_cast<double>(t.p.cols()) >= 0.95 * static_cast<double>(a.rows());
        };
        if (no_progress(tent) && !agg.forced) {
            agg = forced_pairs(graph.nodes);
            tent = tentative_prolongation(agg, cur.block_ptr, nullspace);
        }
        if (no_progress(tent)) break;
        h.forced_aggregation = h.forced_aggregation || agg.forced;

        cur.prolongation = smooth_prolongation(a, tent.p, h.options.seed + h.levels.size());
        cur.provenance = Provenance::algebraic;
        MgLevel next;
        next.op = std::make_shared<const SparseMatrix>(galerkin_product(a, cur.prolongation));
        next.provenance = Provenance::algebraic;
        next.block_ptr = std::move(tent.coarse_block_ptr);
        nullspace = std::move(tent.coarse_nullspace);
        h.levels.push_back(std::move(next));
    }
    h.truncated = h.coarse_size() > h.options.coarse_max_dofs;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

MgHierarchy build_sa_amg(std::shared_ptr<const SparseMatrix> k, const Eigen::MatrixXd& near_nullspace, int block_size,
                         const MgOptions& options) {
    if (!k || k->rows() != k->cols()) throw std::invalid_argument("build_sa_amg: square operator required");
    if (near_nullspace.rows() != k->rows()) throw std::invalid_argument("build_sa_amg: nullspace rows mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    MgHierarchy h;
    h.options = options;
    MgLevel fine;
    fine.op = std::move(k);
    fine.provenance = Provenance::algebraic;
    fine.block_ptr = uniform_blocks(fine.op->rows(), block_size);
    h.levels.push_back(std::move(fine));
    append_algebraic_levels(h, near_nullspace);
    h.finalize();
    h.setup_seconds = seconds_since(t0);
    return h;
}

MgHierarchy build_hybrid(const StructuredMesh& mesh, std::shared_ptr<const SparseMatrix> k,
                         const Eigen::MatrixXd& near_nullspace, int n_geo, const MgOptions& options) {
    if (n_geo < 0) throw std::invalid_argument("build_hybrid: n_geo must be >= 0");
    if (!k || k->rows() != mesh.dof_count()) throw std::invalid_argument("build_hybrid: operator does not match mesh");
    if (near_nullspace.rows() != k->rows()) throw std::invalid_argument("build_hybrid: nullspace rows mismatch");
    if (n_geo == 0) return build_sa_amg(std::move(k), near_nullspace, mesh.dofs_per_node(), options);

    const auto t0 = std::chrono::steady_clock::now();
    MgHierarchy h;
    h.options = options;
    detail::append_geometric_levels(h, mesh, std::move(k), n_geo);
    Eigen::MatrixXd nns = near_nullspace;
    for (std::size_t i = 0; i + 1 < h.levels.size(); ++i) {
        nns = inject_to_coarse(h.levels[i].grid_dims, mesh.dofs_per_node(), nns);
    }
    append_algebraic_levels(h, std::move(nns));
    h.finalize();
    h.setup_seconds = seconds_since(t0);
    return h;
}

}  // namespace topomg
