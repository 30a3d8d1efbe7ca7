#include "doctest.h"

#include "layerhom/homogenize.hpp"

using namespace layerhom;

namespace {

std::shared_ptr<const HexMesh> cell_mesh(const CellSpec &s, int n, InclusionMode mode = InclusionMode::Hole) {
    return std::make_shared<HexMesh>(mesh_cell(build_unit_cell(s), n, mode));
}

CellSpec hole(double a, double b) {
    CellSpec s;
    s.inclusions.push_back(Box::from_array({a, a, a, b, b, b}));
    return s;
}

MaterialSet lame(double lambda, double mu) {
    MaterialSet m;
    m.matrix = m.inclusion = {lambda, mu};
    return m;
}

BlockSetup sandwich() {
    BlockSetup s;
    s.omega = {1, 1};
    s.L = 1;
    s.h = 0.25;
    s.n_block = 3;
    s.materials.a = {0.5, 2.0};
    s.materials.b = {1.5, 0.75};
    return s;
}

} // namespace

TEST_CASE("homogeneous cell: affine correctors and H = diag(mu, mu, lambda + 2 mu)") {
    for (int n : {2, 4, 8}) {
        for (auto lm : {std::pair<double, double>{1.0, 1.0}, {0.7, 1.3}}) {
            auto cell = cell_mesh({}, n);
            CorrectorSet c = solve_correctors(cell, lame(lm.first, lm.second));
            for (int i = 0; i < 3; ++i) {
                for (int v = 0; v < cell->num_nodes(); ++v) {
                    Vec3 expect = cell->nodes[v][2] * Vec3::Unit(i);
                    CHECK((c.chi[i].segment<3>(3 * v) - expect).cwiseAbs().maxCoeff() < 1e-12);
                }
                CHECK(c.residual[i] < 1e-10);
            }
            Eigen::Matrix3d H = Eigen::Vector3d(lm.second, lm.second, lm.first + 2 * lm.second).asDiagonal();
            CHECK((c.H - H).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("holes lower H; H symmetric and positive definite") {
    MaterialSet m = lame(1, 1);
    Eigen::Matrix3d H0 = solve_correctors(cell_mesh({}, 8), m).H;
    Eigen::Matrix3d Hs = solve_correctors(cell_mesh(hole(0.375, 0.625), 8), m).H;
    CorrectorSet big = solve_correctors(cell_mesh(hole(0.25, 0.75), 8), m);
    const Eigen::Matrix3d &Hb = big.H;
    for (int i = 0; i < 3; ++i) {
        CHECK(Hs(i, i) < H0(i, i));
        CHECK(Hb(i, i) < Hs(i, i));
        CHECK(big.residual[i] < 1e-10);
    }
    CHECK((Hb - Hb.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(Hb).eigenvalues().minCoeff() > 0);

    const HexMesh &c = *big.cell;
    for (int i = 0; i < 3; ++i)
        for (int v = 0; v < c.num_nodes(); ++v) {
            if (c.node_grid[v][2] == 0) CHECK(big.chi[i].segment<3>(3 * v).norm() == 0.0);
            if (c.node_grid[v][2] == 8) CHECK((big.chi[i].segment<3>(3 * v) - Vec3::Unit(i)).norm() == 0.0);
            // periodic copies carry identical values
            CHECK(big.chi[i].segment<3>(3 * v) == big.chi[i].segment<3>(3 * c.periodic_master[v]));
        }
}

TEST_CASE("an interior open crack keeps the cell problem solvable") {
    CellSpec s;
    s.open_cracks.push_back(Box::from_array({0.25, 0.25, 0.5, 0.75, 0.75, 0.5}));
    CHECK_NOTHROW(solve_correctors(cell_mesh(s, 4), lame(1, 1)));
}

TEST_CASE("transmission: zero load and the sandwich oracles") {
    Eigen::Matrix3d H = solve_correctors(cell_mesh(hole(0.25, 0.75), 4), lame(1, 1)).H;
    BlockSetup s = sandwich();
    TransmissionResult z = solve_transmission(s, H);
    CHECK(z.u.norm() == 0.0);
    CHECK(z.m == 0.0);

    // normal traction with rollers
    s.test_bc.enabled = true;
    s.test_bc.lateral_fixed = {std::vector<int>{0}, {0}, {1}, {1}};
    s.test_bc.top_traction = Vec3(0, 0, 1);
    TransmissionResult r = solve_transmission(s, H);
    CHECK(r.residual < 1e-10);
    const double slope = 1.0 / (s.materials.b.lambda + 2 * s.materials.b.mu);
    for (const auto &n : r.sigma) {
        Vec3 d = r.u.segment<3>(3 * n.above) - r.u.segment<3>(3 * n.below);
        CHECK(d[2] == doctest::Approx(1.0 / H(2, 2)).epsilon(1e-8));
        CHECK(std::abs(d[0]) + std::abs(d[1]) < 1e-10);
    }
    for (int i = 0; i < r.mesh.num_nodes(); ++i)
        if (r.mesh.nodes[i][2] < 0)
            CHECK(r.u[3 * i + 2] == doctest::Approx(slope * (r.mesh.nodes[i][2] + 1)).epsilon(1e-8));
    // energy of the uniform state: -1/2 t . u(top) |omega|
    CHECK(r.m == doctest::Approx(-0.5 * r.load_work).epsilon(1e-10));

    // shear branch
    s.test_bc.lateral_fixed = {std::vector<int>{1, 2}, {1, 2}, {1, 2}, {1, 2}};
    s.test_bc.top_traction = Vec3(1, 0, 0);
    TransmissionResult t = solve_transmission(s, H);
    for (const auto &n : t.sigma) {
        Vec3 d = t.u.segment<3>(3 * n.above) - t.u.segment<3>(3 * n.below);
        CHECK(d[0] == doctest::Approx(1.0 / H(0, 0)).epsilon(1e-8));
    }
}

TEST_CASE("layer reconstruction") {
    CorrectorSet c = solve_correctors(cell_mesh(hole(0.25, 0.75), 4), lame(1, 2));
    const HexMesh &m = *c.cell;
    Vec3 t(0.3, -1, 2);
    auto same = reconstruct_layer(c, {t}, {t});
    for (int v = 0; v < m.num_nodes(); ++v) CHECK((same[0].segment<3>(3 * v) - t).norm() < 1e-15);
    auto e3 = reconstruct_layer(c, {Vec3::UnitZ()}, {Vec3::Zero()});
    CHECK((e3[0] - c.chi[2]).norm() == 0.0);
    Vec3 a(1, 2, 3), b(-1, 0.5, 0);
    auto u = reconstruct_layer(c, {a}, {b});
    for (int v = 0; v < m.num_nodes(); ++v) {
        if (m.node_grid[v][2] == 0) CHECK((u[0].segment<3>(3 * v) - b).norm() < 1e-15);
        if (m.node_grid[v][2] == 4) CHECK((u[0].segment<3>(3 * v) - a).norm() < 1e-15);
    }
}

TEST_CASE("unfolded limit: zero loads, linear equivalence, contact sign") {
    LimitSetup s;
    s.blocks = sandwich();
    s.blocks.h = 0.5;
    s.blocks.n_block = 2;
    s.cell = build_unit_cell(hole(0.25, 0.75));
    s.n_cell = 4;
    s.cracks.resize(2);
    SolverOptions opt;

    s.mode = InclusionMode::Hole;
    LimitState z = solve_unfolded_limit(s, opt);
    CHECK(z.m == 0.0);

    s.blocks.loads.f = VectorPolynomial::constant(3, Vec3(0.2, 0, -1));
    LimitState lin = solve_unfolded_limit(s, opt);
    Eigen::Matrix3d H = solve_correctors(std::make_shared<HexMesh>(mesh_cell(s.cell, 4, InclusionMode::Hole)),
                                         s.blocks.materials).H;
    TransmissionResult tr = solve_transmission(s.blocks, H);
    CHECK(std::abs(lin.m - tr.m) <= 1e-8 * std::abs(tr.m));
    // Sigma traces match the cell copies
    for (size_t k = 0; k < lin.sigma.size(); ++k) {
        VectorXd v = lin.copy(int(k));
        const HexMesh &c = *lin.cell;
        for (int n = 0; n < c.num_nodes(); ++n) {
            if (c.node_grid[n][2] == 0)
                CHECK(v.segment<3>(3 * n) == lin.solution.u.segment<3>(3 * lin.sigma[k].below));
            if (c.node_grid[n][2] == 4)
                CHECK(v.segment<3>(3 * n) == lin.solution.u.segment<3>(3 * lin.sigma[k].above));
        }
    }

    s.mode = InclusionMode::Contact;
    s.cracks[1].G = Polynomial::constant(5, 0.05);
    LimitState c = solve_unfolded_limit(s, opt);
    CHECK(c.solution.report.converged);
    CHECK(c.m <= 0);
    CHECK(c.solution.report.feasibility <= 1e-10);
    REQUIRE(c.s.size() == 1);
    CHECK(c.s[0].size() == c.sigma.size());
    // the glued layer is stiffer than free sliding: contact energy lies below
    s.mode = InclusionMode::Glued;
    LimitState g = solve_unfolded_limit(s, opt);
    CHECK(c.m <= g.m + 1e-10 * std::abs(g.m));
}
