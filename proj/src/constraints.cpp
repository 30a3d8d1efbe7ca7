#include "layerhom/constraints.hpp"

#include <cmath>

#include <Eigen/CholmodSupport>
#include <Eigen/IterativeLinearSolvers>

#include "layerhom/geometry.hpp"

namespace layerhom {

DofMap::DofMap(int n) : n_(n), master_(n), fixed_flag_(n, 0), fixed_(VectorXd::Zero(n)), red_(n, -1), root_(n) {
    for (int i = 0; i < n; ++i) master_[i] = root_[i] = i;
    finalize();
}

void DofMap::fix(int dof, double value) {
    fixed_flag_.at(dof) = 1;
    fixed_[dof] = value;
    finalized_ = false;
}

void DofMap::tie(int slave, int master) {
    if (slave == master) return;
    master_.at(slave) = master;
    finalized_ = false;
}

int DofMap::resolve(int d) const {
    int steps = 0;
    while (master_[d] != d) {
        d = master_[d];
        if (++steps > n_) throw Error("cyclic dof identification");
    }
    return d;
}

void DofMap::finalize() {
    nr_ = 0;
    std::vector<int> &root = root_;
    root.assign(n_, 0);
    for (int d = 0; d < n_; ++d) root[d] = resolve(d);
    for (int d = 0; d < n_; ++d) {
        if (fixed_flag_[d]) continue;
        if (fixed_flag_[root[d]]) {
            fixed_flag_[d] = 1;
            fixed_[d] = fixed_[root[d]];
        }
    }
    std::fill(red_.begin(), red_.end(), -1);
    for (int d = 0; d < n_; ++d)
        if (!fixed_flag_[d] && root[d] == d) red_[d] = nr_++;
    std::vector<Eigen::Triplet<double>> t;
    for (int d = 0; d < n_; ++d) {
        if (fixed_flag_[d]) continue;
        red_[d] = red_[root[d]];
        t.emplace_back(d, red_[d], 1.0);
    }
    for (int d = 0; d < n_; ++d)
        if (!fixed_flag_[d]) fixed_[d] = 0;
    P_.resize(n_, nr_);
    P_.setFromTriplets(t.begin(), t.end());
    finalized_ = true;
}

VectorXd DofMap::pick(const VectorXd &u) const {
    VectorXd r = VectorXd::Zero(nr_);
    for (int d = n_ - 1; d >= 0; --d)
        if (red_[d] >= 0) r[red_[d]] = u[d];
    return r;
}

SpMat DofMap::reduce(const SpMat &K) const {
    SpMat KP = K * P_;
    SpMat R = P_.transpose() * KP;
    R.prune(0.0);
    return R;
}

LinearSolverKind parse_linear_solver(const std::string &s) {
    if (s == "direct" || s == "ldlt") return LinearSolverKind::Direct;
    if (s == "pcg") return LinearSolverKind::PCG;
    throw Error("unknown linear solver '" + s + "' (direct|pcg)");
}

namespace {
// thin owner of a supernodal CHOLMOD factor; Eigen's wrapper hides the factor
struct Cholmod {
    cholmod_common c;
    cholmod_factor *L = nullptr;
    Cholmod() {
        cholmod_start(&c);
        c.supernodal = CHOLMOD_SUPERNODAL;
        c.print = 0;
    }
    ~Cholmod() {
        if (L) cholmod_free_factor(&L, &c);
        cholmod_finish(&c);
    }
    Cholmod(const Cholmod &) = delete;
    Cholmod &operator=(const Cholmod &) = delete;

    bool factor(const SpMat &A) {
        SpMat &M = const_cast<SpMat &>(A);
        cholmod_sparse S = Eigen::viewAsCholmod(M);
        S.stype = -1;
        L = cholmod_analyze(&S, &c);
        if (!L) return false;
        return cholmod_factorize(&S, L, &c) && c.status == CHOLMOD_OK;
    }
    VectorXd solve(const VectorXd &b) const {
        auto &cc = const_cast<cholmod_common &>(c);
        VectorXd rhs = b;
        cholmod_dense B = Eigen::viewAsCholmod(rhs);
        cholmod_dense *X = cholmod_solve(CHOLMOD_A, L, &B, &cc);
        if (!X) throw Error("cholmod solve failed");
        VectorXd x = Eigen::Map<VectorXd>(static_cast<double *>(X->x), b.size());
        cholmod_free_dense(&X, &cc);
        return x;
    }
    // (min/max diag of L)^2
    double rcond() const { return cholmod_rcond(L, const_cast<cholmod_common *>(&c)); }
};
} // namespace

struct SpdSolver::Impl {
    LinearSolverKind kind;
    Cholmod llt;
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
};

SpdSolver::SpdSolver(const SpMat &A, LinearSolverKind kind, double tol) : impl_(new Impl), n_(int(A.rows())) {
    impl_->kind = kind;
    if (n_ == 0) return;
    if (kind == LinearSolverKind::Direct) {
        auto &llt = impl_->llt;
        if (!llt.factor(A)) throw Error("non-coercive operator: singular or indefinite system");
        if (!(llt.rcond() > 1e-13)) throw Error("non-coercive operator: singular or indefinite system");
    } else {
        impl_->cg.setTolerance(tol);
        impl_->cg.setMaxIterations(20 * n_);
        impl_->cg.compute(A);
        if (impl_->cg.info() != Eigen::Success) throw Error("non-coercive operator: preconditioner failed");
    }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver &&) noexcept = default;

VectorXd SpdSolver::solve(const VectorXd &b) const {
    if (n_ == 0) return VectorXd();
    if (impl_->kind == LinearSolverKind::Direct) return impl_->llt.solve(b);
    VectorXd x = impl_->cg.solve(b);
    if (impl_->cg.info() != Eigen::Success) throw Error("PCG did not converge");
    return x;
}

} // namespace layerhom
