#pragma once

#include <array>
#include <vector>

#include "layerhom/mesh.hpp"

namespace layerhom {

using Eigen::VectorXd;

// r(y) = a + b ^ (y - O), y in unscaled cell coordinates.
struct RigidMotion {
    Vec3 a = Vec3::Zero(), b = Vec3::Zero();
    Vec3 operator()(const Vec3 &y, const Vec3 &O) const { return a + b.cross(y - O); }
};

// Center of gravity O^j of Y^j, j >= 1, from the cell mesh.
Vec3 inclusion_center(const HexMesh &cell_mesh, int j);

struct RigidProjection {
    RigidMotion r;
    VectorXd residual;                  // u with r removed on the nodes of eps xi + eps Y^j
    std::array<double, 6> orthogonality{}; // int residual . r' over the rigid basis (cell units)
    double u_norm = 0;                  // ||u||_{L2(Y^j)} in cell units, for relative checks
};

// L2 projection of u(eps xi + eps .) restricted to Y^j onto the rigid motions.
RigidProjection project_rigid(const HexMesh &layer, const VectorXd &u, int j, int cell);

// Projection of a field on a cell mesh (unscaled coordinates).
RigidMotion rigid_part(const HexMesh &cell_mesh, const VectorXd &v, int j);

// Quantities of the small-domain estimates, per inclusion j.
struct SmallDomain {
    double residual = 0;   // sum_xi ||u - r||^2 + eps^2 ||grad(u - r)||^2
    double strain = 0;     // eps^2 ||e(u)||^2 on Omega^j_eps
    double ratio = 0;      // residual / strain
    double a_L1 = 0;       // ||a^j_u||_{L1(omega)}
    double b_L1 = 0;       // eps ||b^j_u||_{L1(omega)}
    double e_L2 = 0;       // ||e(u)||_{L2(Omega^j_eps)}
    double surface = 0;    // ||(u_nu)^+||_{L1(S^j_eps)} + ||u_tau||_{L1(S^j_eps)}
    double u_L1 = 0;       // ||u||_{L1(Omega^j_eps)}
    double ratio_ab = 0;   // (a_L1 + b_L1) / (sqrt(eps) e_L2 + surface)
    double ratio_u = 0;    // u_L1 / (eps^{3/2} e_L2 + eps surface)
};

struct RigidField {
    double eps = 0;
    std::vector<Vec3> centers;                  // O^j, index j-1
    std::vector<std::vector<RigidMotion>> r;    // [j-1][cell]
    VectorXd residual;                          // u - r_u on every inclusion
    std::vector<SmallDomain> diagnostics;       // index j-1
};

RigidField rigid_fields(const HexMesh &layer, const VectorXd &u);

} // namespace layerhom
