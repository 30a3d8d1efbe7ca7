#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace layerhom {

using SpMat = Eigen::SparseMatrix<double>;
using Eigen::VectorXd;

// Elimination of fixed dofs and identification of slave dofs with masters.
// Full vector u = P r + u_fixed.
class DofMap {
public:
    explicit DofMap(int n_full = 0);

    void fix(int dof, double value = 0);
    void tie(int slave, int master);
    void finalize();

    int full_size() const { return n_; }
    int reduced_size() const { return nr_; }
    int reduced_index(int dof) const { return red_[dof]; } // -1 if fixed
    bool is_fixed(int dof) const { return red_[dof] < 0; }
    // Free and not identified with another dof.
    bool is_free_root(int dof) const { return red_[dof] >= 0 && root_[dof] == dof; }
    const SpMat &P() const { return P_; }
    const VectorXd &fixed_values() const { return fixed_; }

    VectorXd expand(const VectorXd &r) const { return P_ * r + fixed_; }
    VectorXd restrict_sum(const VectorXd &f) const { return P_.transpose() * f; }
    // A representative of full-vector u in the reduced space (master values).
    VectorXd pick(const VectorXd &u) const;
    SpMat reduce(const SpMat &K) const;

private:
    int resolve(int d) const;
    int n_ = 0, nr_ = 0;
    bool finalized_ = false;
    std::vector<int> master_;
    std::vector<char> fixed_flag_;
    VectorXd fixed_;
    std::vector<int> red_;
    std::vector<int> root_;
    SpMat P_;
};

enum class LinearSolverKind { Direct, PCG };
LinearSolverKind parse_linear_solver(const std::string &s);

// Factorization of a symmetric positive definite matrix.
class SpdSolver {
public:
    SpdSolver(const SpMat &A, LinearSolverKind kind = LinearSolverKind::Direct, double tol = 1e-14);
    ~SpdSolver();
    SpdSolver(SpdSolver &&) noexcept;
    VectorXd solve(const VectorXd &b) const;
    int size() const { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_ = 0;
};

} // namespace layerhom
