#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "topomg/multigrid.hpp"

namespace topomg {

std::string to_string(Provenance p) { return p == Provenance::geometric ? "geometric" : "algebraic"; }

struct CoarseSolver::Impl {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool cholesky = false;
    bool ready = false;
};

CoarseSolver::CoarseSolver() : impl_(std::make_unique<Impl>()) {}
CoarseSolver::~CoarseSolver() = default;
CoarseSolver::CoarseSolver(CoarseSolver&&) noexcept = default;
CoarseSolver& CoarseSolver::operator=(CoarseSolver&&) noexcept = default;

void CoarseSolver::factorize(const SparseMatrix& a) {
    const Eigen::SparseMatrix<double> m = a.to_eigen();
    impl_->llt.compute(m);
    if (impl_->llt.info() == Eigen::Success) {
        impl_->cholesky = true;
        impl_->ready = true;
        return;
    }
    impl_->cholesky = false;
    impl_->lu.analyzePattern(m);
    impl_->lu.factorize(m);
    if (impl_->lu.info() != Eigen::Success) throw std::runtime_error("coarse solver: singular coarse operator");
    impl_->ready = true;
}

void CoarseSolver::solve(std::span<const double> b, std::span<double> x) const {
    if (!impl_->ready) throw std::logic_error("coarse solver: not factorized");
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::Map<Eigen::VectorXd> out(x.data(), static_cast<Eigen::Index>(x.size()));
    if (impl_->cholesky) {
        out = impl_->llt.solve(rhs);
    } else {
        out = impl_->lu.solve(rhs);
    }
}

bool CoarseSolver::uses_cholesky() const { return impl_->cholesky; }

int MgHierarchy::geometric_transfers() const {
    int n = 0;
    for (const auto& l : levels) {
        if (l.has_prolongation() && l.provenance == Provenance::geometric) ++n;
    }
    return n;
}

std::vector<Provenance> MgHierarchy::provenance() const {
    std::vector<Provenance> out;
    for (const auto& l : levels) out.push_back(l.provenance);
    return out;
}

void MgHierarchy::finalize() {
    if (levels.empty()) throw std::logic_error("hierarchy: no levels");
    options.smoother.validate();
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        auto& l = levels[i];
        l.smoother = Smoother(options.smoother, *l.op, l.block_ptr, options.seed + i);
    }
    coarse.factorize(*levels.back().op);
}

Vector MgHierarchy::vcycle(std::span<const double> b, std::size_t k) const {
    if (k >= levels.size()) throw std::out_of_range("vcycle: level index out of range");
    const auto& level = levels[k];
    if (b.size() != static_cast<std::size_t>(level.size())) throw std::invalid_argument("vcycle: rhs size mismatch");
    Vector x(b.size(), 0.0);
    if (k + 1 == levels.size()) {
        coarse.solve(b, x);
        return x;
    }
    const SparseMatrix& a = *level.op;
    level.smoother.smooth(a, x, b, options.n_pre);
    Vector r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    const Vector coarse_rhs = level.prolongation.multiply_transpose(r);
    const Vector correction = vcycle(coarse_rhs, k + 1);
    level.prolongation.multiply(correction, r);
    axpy(1.0, r, x);
    level.smoother.smooth(a, x, b, options.n_post);
    return x;
}

void MgHierarchy::apply(std::span<const double> b, std::span<double> x) const {
    const Vector y = vcycle(b, 0);
    std::copy(y.begin(), y.end(), x.begin());
}

nlohmann::json MgHierarchy::summary() const {
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : levels) {
        lv.push_back({{"size", l.size()}, {"nonzeros", l.op->nonzeros()}, {"provenance", to_string(l.provenance)}});
    }
    return {{"levels", lv},
            {"level_count", levels.size()},
            {"geometric_transfers", geometric_transfers()},
            {"coarse_max_dofs", options.coarse_max_dofs},
            {"coarse_factorization", coarse.uses_cholesky() ? "cholesky" : "lu"},
            {"smoother", to_string(options.smoother.kind)},
            {"truncated", truncated},
            {"forced_aggregation", forced_aggregation},
            {"setup_seconds", setup_seconds}};
}

AdaptiveHybridController::AdaptiveHybridController(int n_geo_start, int min_geo, int iteration_threshold)
    : n_geo_(n_geo_start), min_geo_(min_geo), threshold_(iteration_threshold) {
    if (min_geo_ < 0 || n_geo_ < min_geo_) {
        throw std::invalid_argument("adaptive controller: starting level count below the minimum");
    }
}

RebuildDirective AdaptiveHybridController::adapt_after_solve(int last_iterations) {
    if (last_iterations > threshold_ && n_geo_ > min_geo_) {
        --n_geo_;
        return RebuildDirective::rebuild;
    }
    return RebuildDirective::keep;
}

}  // namespace topomg
