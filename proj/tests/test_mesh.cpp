#include "doctest.h"

#include <random>

#include "layerhom/mesh.hpp"

using namespace layerhom;

namespace {
CellGeometry centered(double a, double b) {
    CellSpec s;
    s.inclusions.push_back(Box::from_array({a, a, a, b, b, b}));
    return build_unit_cell(s);
}
} // namespace

TEST_CASE("cell mesh counts") {
    HexMesh m = mesh_cell(centered(0.25, 0.75), 4);
    CHECK(m.elements.size() == 64);
    CHECK(m.element_ids(Region::Inclusion).size() == 8);
    CHECK(m.crack_facets.size() == 24);
    // 125 grid points; the 26 surface points of the 3x3x3 inclusion block get a second copy
    CHECK(m.num_nodes() == 125 + 26);

    HexMesh plain = mesh_cell(build_unit_cell({}), 2);
    CHECK(plain.elements.size() == 8);
    CHECK(plain.crack_facets.empty());
    CHECK(plain.num_dofs() == 3 * 27);

    CHECK_THROWS_WITH(mesh_cell(centered(0.25, 0.75), 3), "incompatible subdivision");

    HexMesh hole = mesh_cell(centered(0.25, 0.75), 4, InclusionMode::Hole);
    CHECK(hole.elements.size() == 56);
    CHECK(hole.num_nodes() == 124);
    HexMesh glued = mesh_cell(centered(0.25, 0.75), 4, InclusionMode::Glued);
    CHECK(glued.crack_facets.empty());
    CHECK(glued.num_nodes() == 125);
}

TEST_CASE("crack facets pair coincident nodes with distinct dofs") {
    CellSpec s;
    s.inclusions.push_back(Box::from_array({0.25, 0.25, 0.25, 0.5, 0.75, 0.5}));
    s.open_cracks.push_back(Box::from_array({0.25, 0.25, 0.75, 0.75, 0.5, 0.75}));
    HexMesh m = mesh_cell(build_unit_cell(s), 4);
    double area[2] = {0, 0};
    for (const auto &f : m.crack_facets) {
        for (int k = 0; k < 4; ++k) {
            // open-crack rims stay bonded: the matrix is connected around them
            const Vec3 &x = m.nodes[f.plus[k]];
            const auto &c = s.open_cracks[0];
            bool rim = f.crack == 0 && (x[0] == c.lo[0] || x[0] == c.hi[0] || x[1] == c.lo[1] || x[1] == c.hi[1]);
            CHECK((f.plus[k] != f.minus[k]) == !rim);
            CHECK((m.nodes[f.plus[k]] - m.nodes[f.minus[k]]).norm() == 0.0);
        }
        area[f.crack == 0 ? 0 : 1] += f.area;
        if (f.crack >= 1) {
            // nu is the outward normal of the inclusion: stepping along nu leaves it
            Vec3 c = 0.5 * (f.lo + f.hi) + 1e-3 * f.normal();
            const Box &b = s.inclusions[0];
            bool in = (c.array() > b.lo.array()).all() && (c.array() < b.hi.array()).all();
            CHECK(!in);
        }
    }
    CHECK(area[0] == doctest::Approx(0.5 * 0.25).epsilon(1e-15));
    CHECK(area[1] == doctest::Approx(s.inclusions[0].surface_area()).epsilon(1e-15));
}

TEST_CASE("jump values and linearity") {
    HexMesh m = mesh_cell(centered(0.25, 0.75), 4);
    const int n = m.num_dofs();
    Eigen::VectorXd cont(n);
    for (int i = 0; i < m.num_nodes(); ++i) cont.segment<3>(3 * i) = Vec3(m.nodes[i][1], 2.0, -m.nodes[i][0]);
    for (const auto &f : m.crack_facets)
        for (int k = 0; k < 4; ++k) {
            Jump j = jump(cont, f, k);
            CHECK(j.normal == 0.0);
            CHECK(j.tangential.norm() == 0.0);
        }

    std::vector<char> inc(m.num_nodes(), 0);
    for (int e : m.element_ids(Region::Inclusion))
        for (int c : m.elements[e].nodes) inc[c] = 1;
    for (const auto &f : m.crack_facets) {
        Vec3 nu = f.normal();
        Vec3 tau = Vec3::Zero();
        tau[(f.axis + 1) % 3] = 1;
        Eigen::VectorXd a = cont, b = cont;
        for (int i = 0; i < m.num_nodes(); ++i)
            if (inc[i]) {
                a.segment<3>(3 * i) += nu;
                b.segment<3>(3 * i) += tau;
            }
        for (int k = 0; k < 4; ++k) {
            CHECK(jump(a, f, k).normal == doctest::Approx(1.0));
            CHECK(jump(a, f, k).tangential.norm() < 1e-15);
            CHECK(std::abs(jump(b, f, k).normal) < 1e-15);
            CHECK(jump(b, f, k).tangential.norm() == doctest::Approx(1.0));
        }
    }

    std::mt19937 rng(3);
    std::normal_distribution<double> N;
    Eigen::VectorXd s1(n), s2(n);
    for (int i = 0; i < n; ++i) { s1[i] = N(rng); s2[i] = N(rng); }
    for (const auto &f : m.crack_facets)
        for (int k = 0; k < 4; ++k) {
            Jump j = jump(2.0 * s1 - 3.0 * s2, f, k), j1 = jump(s1, f, k), j2 = jump(s2, f, k);
            CHECK(std::abs(j.normal - (2 * j1.normal - 3 * j2.normal)) < 1e-13);
            CHECK((j.tangential - (2 * j1.tangential - 3 * j2.tangential)).norm() < 1e-13);
        }
}

TEST_CASE("periodic masters match opposite lateral faces") {
    HexMesh m = mesh_cell(centered(0.25, 0.75), 4);
    int slaves = 0;
    for (int i = 0; i < m.num_nodes(); ++i) {
        int p = m.periodic_master[i];
        CHECK(m.periodic_master[p] == p);
        if (p == i) continue;
        ++slaves;
        Vec3 d = m.nodes[i] - m.nodes[p];
        CHECK(d[2] == 0.0);
        CHECK((d[0] == 0.0 || d[0] == 1.0));
        CHECK((d[1] == 0.0 || d[1] == 1.0));
    }
    // per z-level (5 of them): the x = 1 and y = 1 grid lines, 5 + 5 - 1 points
    CHECK(slaves == 5 * (5 + 5 - 1));
}

TEST_CASE("layered mesh counts and cell maps") {
    CellGeometry plain = build_unit_cell({});
    LayeredDomain d = tile_layer(plain, {1, 1}, 1, 0.5);
    HexMesh m = mesh_assembly(d, 2, 3);
    CHECK(m.element_ids(Region::Matrix).size() == 32);

    CellGeometry c = centered(0.25, 0.75);
    LayeredDomain dc = tile_layer(c, {1, 1}, 1, 0.5);
    HexMesh mc = mesh_assembly(dc, 4, 3);
    CHECK(mc.crack_facets.size() == 4 * 24);
    for (int x = 0; x < 4; ++x) {
        int n = 0;
        for (const auto &f : mc.crack_facets) n += f.cell == x;
        CHECK(n == 24);
    }
    // every cell-mesh node maps to a layer node at eps*(xi + y)
    const HexMesh &cell = *mc.cell_mesh;
    for (int x = 0; x < dc.num_cells(); ++x)
        for (int i = 0; i < cell.num_nodes(); ++i) {
            int g = mc.cell_nodes[x][i];
            REQUIRE(g >= 0);
            Vec3 y = cell.nodes[i];
            Vec3 expect(0.5 * (dc.xi_set[x][0] + y[0]), 0.5 * (dc.xi_set[x][1] + y[1]), 0.5 * y[2]);
            CHECK((mc.nodes[g] - expect).norm() < 1e-15);
        }
    for (const auto &f : mc.crack_facets) {
        const auto &cf = cell.crack_facets[f.local];
        CHECK(cf.axis == f.axis);
        CHECK(cf.sign == f.sign);
        for (int k = 0; k < 4; ++k) {
            CHECK(mc.cell_nodes[f.cell][cf.plus[k]] == f.plus[k]);
            CHECK(mc.cell_nodes[f.cell][cf.minus[k]] == f.minus[k]);
        }
    }
    // graded blocks fill the heights exactly
    CHECK(mc.zs.front() == -1.0);
    CHECK(mc.zs.back() == 1.0);

    LayeredDomain bad = tile_layer(plain, {0.9, 0.9}, 1, 0.25);
    CHECK_THROWS_WITH(mesh_assembly(bad, 2, 2), "exact tiling required");
}

TEST_CASE("block meshes split at Sigma") {
    HexMesh b = mesh_blocks({1, 1}, 1, 0.25, 3);
    CHECK(b.split_facets.size() == 16);
    for (const auto &f : b.split_facets)
        for (int k = 0; k < 4; ++k) {
            CHECK(f.below[k] != f.above[k]);
            CHECK(b.nodes[f.below[k]] == b.nodes[f.above[k]]);
            CHECK(b.nodes[f.below[k]][2] == 0.0);
        }
    auto g = graded_sizes(1.0, 0.1, 4);
    double s = 0;
    for (double v : g) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g[0] == 0.1);
}

TEST_CASE("lumped contact weights sum to crack area") {
    HexMesh m = mesh_cell(centered(0.25, 0.75), 4);
    double w = 0;
    for (const auto &c : lumped_contact_nodes(m)) w += c.weight;
    CHECK(w == doctest::Approx(1.5).epsilon(1e-15));
}
