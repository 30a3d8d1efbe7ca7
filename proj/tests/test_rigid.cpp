#include "doctest.h"

#include <random>

#include "layerhom/assembly.hpp"
#include "layerhom/rigid.hpp"

using namespace layerhom;

namespace {

HexMesh layer(double eps) {
    CellSpec s;
    s.inclusions.push_back(Box::from_array({0.25, 0.25, 0.25, 0.75, 0.5, 0.75}));
    s.inclusions.push_back(Box::from_array({0.25, 0.75, 0.25, 0.5, 0.875, 0.5}));
    return mesh_assembly(tile_layer(build_unit_cell(s), {1, 1}, 1, eps), 8, 2);
}

VectorXd random_field(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N;
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = N(rng);
    return v;
}

// cell coordinates of a layer node
Vec3 cell_coord(const HexMesh &m, int cell, int cell_node) { return m.cell_mesh->nodes[cell_node]; }

} // namespace

TEST_CASE("inclusion centers") {
    HexMesh m = layer(0.5);
    CHECK((inclusion_center(*m.cell_mesh, 1) - Vec3(0.5, 0.375, 0.5)).norm() < 1e-15);
    CHECK((inclusion_center(*m.cell_mesh, 2) - Vec3(0.375, 0.8125, 0.375)).norm() < 1e-15);
}

TEST_CASE("projection recovers rigid motions and is idempotent") {
    HexMesh m = layer(0.5);
    const HexMesh &c = *m.cell_mesh;
    const Vec3 O = inclusion_center(c, 1);
    RigidMotion r{Vec3(0.3, -0.2, 1.0), Vec3(0.5, 0.1, -0.7)};
    VectorXd u = VectorXd::Zero(m.num_dofs());
    for (int i = 0; i < c.num_nodes(); ++i) u.segment<3>(3 * m.cell_nodes[2][i]) = r(cell_coord(m, 2, i), O);
    RigidProjection p = project_rigid(m, u, 1, 2);
    CHECK((p.r.a - r.a).norm() < 1e-13);
    CHECK((p.r.b - r.b).norm() < 1e-13);
    for (int e : m.element_ids(Region::Inclusion)) {
        const auto &el = m.elements[e];
        if (el.cell != 2 || el.inclusion != 0) continue;
        for (int n : el.nodes) CHECK(p.residual.segment<3>(3 * n).norm() < 1e-13);
    }
    RigidProjection zero = project_rigid(m, VectorXd::Zero(m.num_dofs()), 1, 0);
    CHECK(zero.r.a.norm() == 0.0);
    CHECK(zero.r.b.norm() == 0.0);
}

TEST_CASE("projection orthogonality on random fields") {
    HexMesh m = layer(0.5);
    for (unsigned t = 0; t < 10; ++t) {
        VectorXd u = random_field(m.num_dofs(), t);
        const int j = 1 + t % 2, cell = t % 4;
        RigidProjection p = project_rigid(m, u, j, cell);
        for (double o : p.orthogonality) CHECK(std::abs(o) <= 1e-12 * p.u_norm);
        RigidProjection q = project_rigid(m, p.residual, j, cell);
        CHECK(q.r.a.norm() <= 1e-12 * p.u_norm);
        CHECK(q.r.b.norm() <= 1e-12 * p.u_norm);
        // linearity
        VectorXd v = random_field(m.num_dofs(), 100 + t);
        RigidProjection pv = project_rigid(m, v, j, cell), pw = project_rigid(m, 2 * u - v, j, cell);
        CHECK((pw.r.a - (2 * p.r.a - pv.r.a)).norm() < 1e-12);
        CHECK((pw.r.b - (2 * p.r.b - pv.r.b)).norm() < 1e-12);
    }
    CHECK_THROWS(project_rigid(m, VectorXd::Zero(m.num_dofs()), 3, 0));
}

TEST_CASE("rigid fields of translations and single-cell rotations") {
    HexMesh m = layer(0.5);
    const HexMesh &c = *m.cell_mesh;
    Vec3 t(1, 2, 3);
    VectorXd u(m.num_dofs());
    for (int i = 0; i < m.num_nodes(); ++i) u.segment<3>(3 * i) = t;
    RigidField F = rigid_fields(m, u);
    REQUIRE(F.r.size() == 2);
    for (const auto &rj : F.r)
        for (const auto &r : rj) {
            CHECK((r.a - t).norm() < 1e-13);
            CHECK(r.b.norm() < 1e-13);
        }
    for (int e : m.element_ids(Region::Inclusion))
        for (int n : m.elements[e].nodes) CHECK(F.residual.segment<3>(3 * n).norm() < 1e-13);
    CHECK(F.diagnostics[0].a_L1 == doctest::Approx(t.norm()).epsilon(1e-13));

    // rotation about O^1 in cell 3 only, applied to the inclusion nodes
    const Vec3 O = inclusion_center(c, 1);
    Vec3 w(0, 0, 1);
    VectorXd v = VectorXd::Zero(m.num_dofs());
    for (int e : c.element_ids(Region::Inclusion)) {
        if (c.elements[e].inclusion != 0) continue;
        for (int n : c.elements[e].nodes) v.segment<3>(3 * m.cell_nodes[3][n]) = w.cross(c.nodes[n] - O);
    }
    RigidField G = rigid_fields(m, v);
    for (int x = 0; x < 4; ++x) {
        CHECK(G.r[0][x].a.norm() < 1e-13);
        CHECK((G.r[0][x].b - (x == 3 ? w : Vec3::Zero())).norm() < 1e-13);
    }
}

TEST_CASE("strain is unchanged by removing rigid parts; small-domain ratio is stable") {
    double ratio[2];
    int k = 0;
    for (double eps : {0.5, 0.25}) {
        HexMesh m = layer(eps);
        // smooth random field sampled at the nodes (same function for both eps)
        std::mt19937 rng(42);
        std::normal_distribution<double> N;
        Eigen::Matrix3d A, B;
        for (int i = 0; i < 9; ++i) { A.data()[i] = N(rng); B.data()[i] = N(rng); }
        VectorXd u(m.num_dofs());
        for (int i = 0; i < m.num_nodes(); ++i) {
            const Vec3 &x = m.nodes[i];
            u.segment<3>(3 * i) = A * x + B * Vec3(std::sin(7 * x[0]), std::cos(5 * x[1]), x[2] * x[2] * 9);
        }
        RigidField F = rigid_fields(m, u);
        for (int e : m.element_ids(Region::Inclusion))
            for (int q = 0; q < 8; ++q)
                CHECK((strain(u, m, e)[q] - strain(F.residual, m, e)[q]).cwiseAbs().maxCoeff() < 1e-12 *
                      std::max(1.0, strain(u, m, e)[q].norm()));
        ratio[k++] = F.diagnostics[0].ratio;
        CHECK(F.diagnostics[0].ratio > 0);
    }
    CHECK(ratio[0] / ratio[1] < 2.0);
    CHECK(ratio[1] / ratio[0] < 2.0);
}
