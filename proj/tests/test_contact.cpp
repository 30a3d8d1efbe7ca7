#include "doctest.h"

#include <random>

#include "layerhom/contact.hpp"
#include "layerhom/eps_problem.hpp"

using namespace layerhom;

namespace {

// Two free points a (minus) and b (plus), each tied to the ground by a
// spring; the contact jump is u_b - u_a with normal e3.
struct Springs {
    double ka = 2.0, kb = 3.0, w = 0.5, g = 0.1, G = 1.0;
    Vec3 fa = Vec3::Zero(), fb = Vec3::Zero();

    ContactProblem problem() const {
        ContactProblem p;
        p.K.resize(6, 6);
        for (int i = 0; i < 3; ++i) {
            p.K.insert(i, i) = ka;
            p.K.insert(3 + i, 3 + i) = kb;
        }
        p.f.resize(6);
        p.f << fa, fb;
        p.dofs = DofMap(6);
        ContactConstraint c;
        c.plus = 3;
        c.minus = 0;
        c.weight = w;
        c.gap = g;
        c.bound = G;
        p.nodes.push_back(c);
        return p;
    }

    // closed form: normal and tangential parts decouple
    void exact(Vec3 &a, Vec3 &b, Vec3 &sigma) const {
        const double c = 1 / ka + 1 / kb;
        const double dn = fb[2] / kb - fa[2] / ka;
        const double lam = dn > g ? (dn - g) / c : 0.0;
        Eigen::Vector2d d0(fb[0] / kb - fa[0] / ka, fb[1] / kb - fa[1] / ka);
        Eigen::Vector2d q = d0.norm() <= c * w * G ? Eigen::Vector2d(d0 / c) : Eigen::Vector2d(w * G * d0 / d0.norm());
        a = Vec3((fa[0] + q[0]) / ka, (fa[1] + q[1]) / ka, (fa[2] + lam) / ka);
        b = Vec3((fb[0] - q[0]) / kb, (fb[1] - q[1]) / kb, (fb[2] - lam) / kb);
        sigma = -Vec3(q[0], q[1], lam) / w;
    }
};

SolverOptions tight() {
    SolverOptions o;
    o.tol_feas = 1e-12;
    o.tol_dual = 1e-11;
    o.tol_energy = 1e-13;
    return o;
}

void check_against_exact(const Springs &s) {
    ContactProblem p = s.problem();
    ContactSolution sol = minimize(p, tight());
    Vec3 a, b, sig;
    s.exact(a, b, sig);
    CHECK(sol.report.converged);
    CHECK((sol.u.segment<3>(0) - a).norm() < 1e-8);
    CHECK((sol.u.segment<3>(3) - b).norm() < 1e-8);
    CHECK((sol.traction[0] - sig).norm() < 1e-7 * std::max(1.0, sig.norm()));
    KktReport k = check_kkt(p, sol);
    CHECK(k.ok);
    CHECK(k.equilibrium < 1e-7);
    for (size_t i = 1; i < sol.report.energy_history.size(); ++i)
        CHECK(sol.report.energy_history[i] <= sol.report.energy_history[i - 1]);
}

} // namespace

TEST_CASE("spring pair: separated, closed, stick and slip") {
    Springs s;
    SUBCASE("separated") { s.fb = Vec3(0, 0, 0.2); }
    SUBCASE("gap closes") { s.fb = Vec3(0, 0, 1.0); s.fa = Vec3(0, 0, -0.4); }
    SUBCASE("stick") { s.fb = Vec3(0.5, -0.3, 0.9); s.fa = Vec3(-0.1, 0, 0); }
    SUBCASE("slip") { s.fb = Vec3(2.0, 1.5, -0.5); s.fa = Vec3(0, -1, 0.3); }
    SUBCASE("slip with closed gap") { s.g = 0; s.fb = Vec3(-3.0, 0.2, 2.0); }
    check_against_exact(s);
}

TEST_CASE("fixed minus side acts as a rigid obstacle") {
    Springs s;
    s.fb = Vec3(4, 0, 1);
    ContactProblem p = s.problem();
    for (int i = 0; i < 3; ++i) p.dofs.fix(i);
    p.dofs.finalize();
    ContactSolution sol = minimize(p, tight());
    // u_b = (shrink(f_t, wG), min(f_n, k g)) / k
    CHECK(sol.u[3] == doctest::Approx((4 - s.w * s.G) / s.kb).epsilon(1e-9));
    CHECK(sol.u[5] == doctest::Approx(s.g).epsilon(1e-9));
    CHECK(sol.u.head<3>().norm() == 0.0);
    CHECK(check_kkt(p, sol).ok);
}

TEST_CASE("zero data gives the zero state") {
    Springs s;
    ContactSolution sol = minimize(s.problem(), tight());
    CHECK(sol.u.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(sol.report.m == doctest::Approx(0.0));
}

TEST_CASE("variational inequality certificate") {
    Springs s;
    s.fb = Vec3(2.0, 1.5, 1.0);
    s.fa = Vec3(0, -1, -0.3);
    ContactProblem p = s.problem();
    ContactSolution sol = minimize(p, tight());
    ViResult ok = vi_residual(p, sol.u, 200, 7);
    CHECK(ok.normalized >= -1e-8);

    // the unconstrained elastic state, pushed back to admissibility, is not a solution
    VectorXd bad(6);
    bad << s.fa / s.ka, s.fb / s.kb;
    bad = restore_feasibility(p, bad);
    CHECK(feasibility_violation(p, bad) <= 0);
    ViResult no = vi_residual(p, bad, 200, 7, {sol.u});
    CHECK(no.normalized < -1e-3);
}

TEST_CASE("minimizer does not depend on the starting point") {
    Springs s;
    s.fb = Vec3(1.2, -0.7, 0.8);
    ContactProblem p = s.problem();
    std::mt19937 rng(2);
    std::normal_distribution<double> N;
    VectorXd ref = minimize(p, tight()).u;
    for (int t = 0; t < 3; ++t) {
        VectorXd u0(6);
        for (int i = 0; i < 6; ++i) u0[i] = 5 * N(rng);
        CHECK((minimize(p, tight(), &u0).u - ref).norm() < 1e-8);
    }
}

TEST_CASE("invalid contact data is rejected") {
    Springs s;
    s.g = -0.1;
    CHECK_THROWS_WITH(minimize(s.problem(), {}), "negative gap");
    Springs t;
    t.G = 0;
    CHECK_THROWS_WITH(minimize(t.problem(), {}), "friction bound must be positive");
}

namespace {
EpsSetup small_setup(double eps) {
    EpsSetup s;
    CellSpec c;
    c.inclusions.push_back(Box::from_array({0.25, 0.25, 0.25, 0.75, 0.75, 0.75}));
    s.cell = build_unit_cell(c);
    s.omega = {1, 1};
    s.eps = eps;
    s.n_cell = 4;
    s.n_block = 2;
    s.cracks.resize(2);
    s.cracks[1].G = Polynomial::constant(5, 0.5);
    s.cracks[1].M = 0.5;
    return s;
}
} // namespace

TEST_CASE("layered problem: zero loads, compression and bound check") {
    EpsSetup s = small_setup(0.5);
    EpsSystem z = build_eps_system(s);
    CHECK(z.problem.nodes.size() == z.contact.size());
    CHECK(!z.problem.nodes.empty());
    ContactSolution zs = minimize(z.problem, {});
    CHECK(zs.u.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(bound_check(z, zs.u).ratio == 0.0);

    s.loads.f = VectorPolynomial::constant(3, Vec3(0.1, 0, -1));
    for (auto &r : s.loads.f_regions) r = true;
    EpsSystem sys = build_eps_system(s);
    // f constant off the inclusions: |Omega*| = 2 - 4 cells * (eps/2)^3
    CHECK(sys.f_L2 == doctest::Approx(std::sqrt(1.01 * (2.0 - 4 * 0.015625))).epsilon(1e-12));
    ContactSolution sol = minimize(sys.problem, {});
    CHECK(sol.report.converged);
    KktReport k = check_kkt(sys.problem, sol, 1e-6, 1e-3);
    CHECK(k.feasibility <= 1e-10);
    CHECK(k.max_traction_ratio <= 1 + 1e-6);
    CHECK(vi_residual(sys.problem, sol.u, 50, 1).normalized >= -1e-6);
    BoundCheck b = bound_check(sys, sol.u);
    CHECK(b.M_value > 0);
    CHECK(b.data == doctest::Approx(sys.f_L2));
    CHECK(b.cond == doctest::Approx(b.data / 0.5));
}
