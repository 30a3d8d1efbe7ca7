#pragma once

#include <cstdint>
#include <vector>

#include "layerhom/constraints.hpp"
#include "layerhom/geometry.hpp"

namespace layerhom {

// One lumped contact node of a generic system: the jump is
// u[plus..plus+2] - u[minus..minus+2] (full dof indices of the x components).
struct ContactConstraint {
    int plus = -1, minus = -1;
    Vec3 normal = Vec3::UnitZ();
    double weight = 0; // quadrature weight (area)
    double gap = 0;    // g >= 0
    double bound = 0;  // G > 0
    int crack = 0;
    int group = -1;    // cell or grid-node index, for reporting
};

// min 1/2 u.K u - f.u + sum_k w_k G_k |[u_tau]_k|  s.t.  [u_nu]_k <= g_k
struct ContactProblem {
    SpMat K;
    VectorXd f;
    DofMap dofs;
    std::vector<ContactConstraint> nodes;
};

struct SolverOptions {
    double tol_energy = 1e-9;
    double tol_feas = 1e-10;
    double tol_dual = 1e-8;
    int max_iter = 20000;
    int check_every = 10;
    double rho_factor = 1.0;
    double relaxation = 1.6;
    LinearSolverKind linear = LinearSolverKind::Direct;
};

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    double m = 0;                       // final energy
    std::vector<double> energy_history; // nonincreasing
    double feasibility = 0;             // max ([u_nu] - g)^+
    double primal_residual = 0;         // relative
    double dual_residual = 0;           // relative
    double rho = 0;
};

struct ContactSolution {
    VectorXd u;                  // full vector
    std::vector<Vec3> traction;  // per contact node, force per area on the plus body
    SolveReport report;
};

ContactSolution minimize(const ContactProblem &p, const SolverOptions &opt, const VectorXd *u0 = nullptr);

double contact_energy(const ContactProblem &p, const VectorXd &u);
double friction_work(const ContactProblem &p, const VectorXd &u);
double feasibility_violation(const ContactProblem &p, const VectorXd &u);
// Removes interpenetration by moving plus sides along -nu (minus sides if
// the plus dofs are fixed). Returns a full vector.
VectorXd restore_feasibility(const ContactProblem &p, const VectorXd &u);

struct ViResult {
    double min_residual = 0; // min over samples (>= -tol expected)
    double scale = 0;        // data/energy scale used for normalization
    double normalized = 0;   // min_residual / scale
    int samples = 0;
};
// Sampled certificate of the variational inequality at u. Candidates are
// restorations of u + t d for random d, the zero state when admissible, and extra.
ViResult vi_residual(const ContactProblem &p, const VectorXd &u, int samples, std::uint64_t seed,
                     const std::vector<VectorXd> &extra = {});

struct KktReport {
    double feasibility = 0;
    double comp_normal = 0;       // max |sigma_nu ([u_nu] - g)|
    double comp_scale = 0;        // max|sigma| * length scale
    double max_sigma_normal = 0;  // max sigma_nu (should be <= 0)
    double comp_tangential = 0;   // worst violation of the stick/slip dichotomy (relative to G)
    double max_traction_ratio = 0; // max |sigma_tau| / G
    double equilibrium = 0;       // |f - K u - reaction| relative
    int stick = 0, slip = 0;
    bool ok = false;
};
KktReport check_kkt(const ContactProblem &p, const ContactSolution &s, double tol_comp = 1e-8,
                    double tol_slip_dir = 1e-4);

} // namespace layerhom
