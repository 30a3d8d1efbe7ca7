#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "layerhom/assembly.hpp"
#include "layerhom/contact.hpp"
#include "layerhom/rigid.hpp"

namespace layerhom {

// chi^i on the cell mesh: e_i on y3 = 1, 0 on y3 = 0, laterally periodic.
struct CorrectorSet {
    std::shared_ptr<const HexMesh> cell;
    std::array<VectorXd, 3> chi;
    std::array<double, 3> residual{}; // relative Galerkin residual
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
};

// Cell mesh in Hole or Glued mode; only the matrix/inclusion materials are used.
CorrectorSet solve_correctors(std::shared_ptr<const HexMesh> cell, const MaterialSet &mat,
                              LinearSolverKind linear = LinearSolverKind::Direct);
// H_ij = int a^M e(chi^i) : e(chi^j)
Eigen::Matrix3d effective_H(const CorrectorSet &c, const MaterialSet &mat);

// Lateral roller / top traction conditions for the transmission oracles.
struct TestBC {
    bool enabled = false;
    std::array<std::vector<int>, 4> lateral_fixed; // faces x0, x1, y0, y1: fixed components
    Vec3 top_traction = Vec3::Zero();
};

// Omega^b and Omega^a meshed separately, split at Sigma.
struct BlockSetup {
    Rect2 omega;
    double L = 1;
    double h = 0.25; // in-plane spacing and first vertical size at Sigma
    int n_block = 4;
    MaterialSet materials;
    Loads loads;
    std::vector<std::string> gamma{"bottom"};
    TestBC test_bc;
};

// One lumped quadrature node of Sigma.
struct SigmaNode {
    int below = -1, above = -1;
    double weight = 0;
    Vec3 x;
};
std::vector<SigmaNode> sigma_nodes(const HexMesh &blocks);

struct TransmissionResult {
    HexMesh mesh;
    std::vector<SigmaNode> sigma;
    VectorXd u;
    double m = 0;
    double elastic_b = 0, elastic_a = 0, interface = 0, load_work = 0;
    double residual = 0; // relative Galerkin residual
};

TransmissionResult solve_transmission(const BlockSetup &s, const Eigen::Matrix3d &H,
                                      LinearSolverKind linear = LinearSolverKind::Direct);

// u^0 = sum_i chi^i ua_i + (e_i - chi^i) ub_i at each Sigma node.
std::vector<VectorXd> reconstruct_layer(const CorrectorSet &c, const std::vector<Vec3> &ua,
                                        const std::vector<Vec3> &ub);

// Unfolded limit: one cell copy per Sigma node, bottom tied to u^b and top to
// u^a there, inclusions carried as whole fields V^j = u^j + s^j.
struct LimitSetup {
    BlockSetup blocks;
    CellGeometry cell;
    int n_cell = 4;
    InclusionMode mode = InclusionMode::Contact;
    std::vector<CrackData> cracks;
};

struct LimitState {
    HexMesh blocks;
    std::shared_ptr<const HexMesh> cell;
    std::vector<SigmaNode> sigma;
    ContactProblem problem;
    ContactSolution solution;
    int block_dofs = 0;
    double m = 0;
    double elastic_blocks = 0, elastic_layer = 0, friction = 0, load_work = 0;
    std::vector<std::vector<RigidMotion>> s; // [j-1][sigma node]: rigid part (c^j, d^j)

    VectorXd copy(int k) const; // cell field at Sigma node k
};

LimitState solve_unfolded_limit(const LimitSetup &s, const SolverOptions &opt);

} // namespace layerhom
