#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "layerhom/geometry.hpp"

using namespace layerhom;

namespace {

Box box(double a, double b, double c, double d, double e, double f) { return Box::from_array({a, b, c, d, e, f}); }

bool inside_closed(const Box &b, const Vec3 &p) {
    for (int k = 0; k < 3; ++k)
        if (p[k] < b.lo[k] || p[k] > b.hi[k]) return false;
    return true;
}

// Brute force: march from sample points of every open crack along +-normal
// until the ray leaves Y or hits an inclusion; also the distance to dY.
void sampled_margins(const CellSpec &s, double &clear, double &eta) {
    clear = eta = 1e9;
    const double step = 1e-4;
    auto bdist = [](const Vec3 &p) {
        double d = 1e9;
        for (int k = 0; k < 3; ++k) d = std::min({d, p[k], 1 - p[k]});
        return d;
    };
    for (const auto &c : s.open_cracks) {
        const int a = c.planar_axis();
        const int p = (a + 1) % 3, q = (a + 2) % 3;
        for (int i = 0; i <= 40; ++i)
            for (int j = 0; j <= 40; ++j) {
                Vec3 x = c.lo;
                x[p] += (c.hi[p] - c.lo[p]) * i / 40.0;
                x[q] += (c.hi[q] - c.lo[q]) * j / 40.0;
                eta = std::min(eta, bdist(x));
                for (int sgn : {-1, 1}) {
                    double t = 0;
                    while (true) {
                        t += step;
                        Vec3 y = x;
                        y[a] += sgn * t;
                        bool hit = y[a] <= 0 || y[a] >= 1;
                        for (const auto &b : s.inclusions) hit = hit || inside_closed(b, y);
                        if (hit) break;
                    }
                    clear = std::min(clear, t);
                }
            }
    }
    for (const auto &b : s.inclusions)
        for (int k = 0; k < 3; ++k) eta = std::min({eta, b.lo[k], 1 - b.hi[k]});
}

} // namespace

TEST_CASE("centered inclusion margin and center") {
    CellSpec s;
    s.inclusions.push_back(box(0.3, 0.3, 0.3, 0.7, 0.7, 0.7));
    CellGeometry g = build_unit_cell(s);
    CHECK(g.eta == doctest::Approx(0.3).epsilon(1e-15));
    CHECK((g.centers[0] - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);
}

TEST_CASE("inclusion touching the boundary is rejected") {
    CellSpec s;
    s.inclusions.push_back(box(0, 0, 0, 0.5, 0.5, 0.5));
    CHECK_THROWS_WITH(build_unit_cell(s), "crack touches cell boundary");
}

TEST_CASE("overlapping inclusions and crack through inclusion are rejected") {
    CellSpec s;
    s.inclusions.push_back(box(0.2, 0.2, 0.2, 0.5, 0.5, 0.5));
    s.inclusions.push_back(box(0.5, 0.2, 0.2, 0.7, 0.5, 0.5));
    CHECK_THROWS_WITH(build_unit_cell(s), "overlapping inclusions");
    CellSpec t;
    t.inclusions.push_back(box(0.3, 0.3, 0.3, 0.7, 0.7, 0.7));
    t.open_cracks.push_back(box(0.1, 0.1, 0.5, 0.9, 0.9, 0.5));
    CHECK_THROWS_WITH(build_unit_cell(t), "open crack intersects inclusion closure");
}

TEST_CASE("open crack clearance agrees with sampling") {
    CellSpec s;
    s.open_cracks.push_back(box(0.25, 0.25, 0.5, 0.75, 0.75, 0.5));
    CellGeometry g = build_unit_cell(s);
    double clear, eta;
    sampled_margins(s, clear, eta);
    CHECK(g.t0 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(g.t0 - std::min(clear, eta)) < 2e-4);
    CHECK(std::abs(g.normal_clearance - clear) < 2e-4);

    CellSpec s2;
    s2.open_cracks.push_back(box(0.15, 0.15, 0.4, 0.85, 0.85, 0.4));
    s2.inclusions.push_back(box(0.3, 0.3, 0.5, 0.7, 0.7, 0.8));
    CellGeometry g2 = build_unit_cell(s2);
    sampled_margins(s2, clear, eta);
    CHECK(std::abs(g2.normal_clearance - clear) < 2e-4);
    CHECK(std::abs(g2.eta - eta) < 1e-12);
    CHECK(std::abs(g2.t0 - std::min(clear, eta)) < 2e-4);
    CHECK(g2.t0 == doctest::Approx(0.1));
}

TEST_CASE("margins are invariant under permutation of the inclusion list") {
    CellSpec s;
    s.inclusions.push_back(box(0.1, 0.1, 0.1, 0.3, 0.3, 0.3));
    s.inclusions.push_back(box(0.5, 0.6, 0.4, 0.8, 0.85, 0.9));
    s.open_cracks.push_back(box(0.5, 0.1, 0.2, 0.9, 0.4, 0.2));
    CellGeometry g = build_unit_cell(s);
    std::reverse(s.inclusions.begin(), s.inclusions.end());
    CellGeometry h = build_unit_cell(s);
    CHECK(g.eta == h.eta);
    CHECK(g.t0 == h.t0);
}

TEST_CASE("tiling counts") {
    CellGeometry g = build_unit_cell({});
    LayeredDomain d = tile_layer(g, {1, 1}, 1, 0.25);
    CHECK(d.num_cells() == 16);
    CHECK(d.exact);
    CHECK(d.lambda_area == 0);
    CHECK(d.hat_area == doctest::Approx(1.0).epsilon(1e-15));
    LayeredDomain t = tile_layer(g, {1, 1}, 1, 1.0 / 3);
    CHECK(t.num_cells() == 9);
    CHECK(t.exact);
    CHECK(std::abs(t.hat_area - 1.0) < 1e-15);

    LayeredDomain p = tile_layer(g, {0.9, 0.9}, 1, 0.25);
    CHECK(p.num_cells() == 9);
    CHECK(!p.exact);
    // direct enumeration of translations with eps(xi + Y') inside omega
    int count = 0;
    for (int i = -2; i < 10; ++i)
        for (int j = -2; j < 10; ++j)
            if (i >= 0 && j >= 0 && 0.25 * (i + 1) <= 0.9 && 0.25 * (j + 1) <= 0.9) ++count;
    CHECK(count == 9);
    CHECK(p.lambda_area == doctest::Approx(0.81 - 9.0 / 16).epsilon(1e-14));

    LayeredDomain e = tile_layer(g, {0.2, 1}, 1, 0.25);
    CHECK(e.num_cells() == 0);
    CHECK(!e.warnings.empty());
    CHECK_THROWS(tile_layer(g, {1, 1}, 1, 0));
}

TEST_CASE("coverage is monotone under halving eps") {
    CellGeometry g = build_unit_cell({});
    for (Rect2 w : {Rect2{1, 1}, Rect2{0.9, 0.7}, Rect2{1.3, 0.55}}) {
        double eps = 0.5, prev = 0;
        for (int k = 0; k < 5; ++k, eps /= 2) {
            LayeredDomain d = tile_layer(g, w, 2, eps);
            CHECK(d.hat_area >= prev - 1e-15);
            prev = d.hat_area;
        }
    }
}
