#include "layerhom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace layerhom {

Box Box::from_array(const std::array<double, 6> &c) {
    Box b;
    b.lo = Vec3(c[0], c[1], c[2]);
    b.hi = Vec3(c[3], c[4], c[5]);
    return b;
}

int Box::planar_axis() const {
    int axis = -1, count = 0;
    for (int a = 0; a < 3; ++a) {
        if (hi[a] == lo[a]) { axis = a; ++count; }
    }
    return count == 1 ? axis : -1;
}

double Box::area() const {
    int a = planar_axis();
    if (a < 0) return 0;
    return (hi[(a + 1) % 3] - lo[(a + 1) % 3]) * (hi[(a + 2) % 3] - lo[(a + 2) % 3]);
}

double Box::surface_area() const {
    Vec3 d = hi - lo;
    return 2 * (d[0] * d[1] + d[1] * d[2] + d[0] * d[2]);
}

bool closures_intersect(const Box &a, const Box &b) {
    for (int k = 0; k < 3; ++k)
        if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
    return true;
}

double CellGeometry::crack_area(int j) const {
    if (j == 0) {
        double s = 0;
        for (const auto &c : open_cracks) s += c.area();
        return s;
    }
    return inclusions.at(j - 1).surface_area();
}

double CellGeometry::matrix_volume() const {
    double v = 1;
    for (const auto &b : inclusions) v -= b.volume();
    return v;
}

namespace {

double boundary_margin(const Box &b) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) m = std::min({m, b.lo[k], 1.0 - b.hi[k]});
    return m;
}

// Closed overlap of the projections of two boxes on the plane orthogonal to axis.
bool projections_overlap(const Box &a, const Box &b, int axis) {
    for (int k = 0; k < 3; ++k) {
        if (k == axis) continue;
        if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
    }
    return true;
}

// Distance along the normal of a planar crack to the nearest obstacle, taken
// over all points of the crack and both sides.
double clearance(const Box &crack, const std::vector<Box> &obstacles, int self) {
    const int a = crack.planar_axis();
    const double at = crack.lo[a];
    double c = std::min(at, 1.0 - at);
    for (int i = 0; i < int(obstacles.size()); ++i) {
        if (i == self) continue;
        const Box &o = obstacles[i];
        if (!projections_overlap(crack, o, a)) continue;
        if (o.lo[a] >= at) c = std::min(c, o.lo[a] - at);
        else if (o.hi[a] <= at) c = std::min(c, at - o.hi[a]);
        else c = 0; // straddles the plane over an overlapping footprint
    }
    return c;
}

} // namespace

CellGeometry build_unit_cell(const CellSpec &spec) {
    CellGeometry g;
    g.inclusions = spec.inclusions;
    g.open_cracks = spec.open_cracks;

    double eta = std::numeric_limits<double>::infinity();
    for (const auto &b : g.inclusions) {
        for (int k = 0; k < 3; ++k)
            if (!(b.hi[k] > b.lo[k])) throw Error("degenerate inclusion box");
        eta = std::min(eta, boundary_margin(b));
    }
    for (const auto &c : g.open_cracks) {
        if (c.planar_axis() < 0) throw Error("open crack must be a planar axis-aligned rectangle");
        for (int k = 0; k < 3; ++k)
            if (k != c.planar_axis() && !(c.hi[k] > c.lo[k])) throw Error("degenerate open crack");
        eta = std::min(eta, boundary_margin(c));
    }
    if (!(eta > 0)) throw Error("crack touches cell boundary");

    for (size_t i = 0; i < g.inclusions.size(); ++i)
        for (size_t j = i + 1; j < g.inclusions.size(); ++j)
            if (closures_intersect(g.inclusions[i], g.inclusions[j]))
                throw Error("overlapping inclusions");
    for (const auto &c : g.open_cracks)
        for (const auto &b : g.inclusions)
            if (closures_intersect(c, b)) throw Error("open crack intersects inclusion closure");
    for (size_t i = 0; i < g.open_cracks.size(); ++i)
        for (size_t j = i + 1; j < g.open_cracks.size(); ++j)
            if (closures_intersect(g.open_cracks[i], g.open_cracks[j]))
                throw Error("open cracks intersect");

    std::vector<Box> obstacles = g.open_cracks;
    obstacles.insert(obstacles.end(), g.inclusions.begin(), g.inclusions.end());
    double cl = std::numeric_limits<double>::infinity();
    for (int i = 0; i < int(g.open_cracks.size()); ++i)
        cl = std::min(cl, clearance(g.open_cracks[i], obstacles, i));
    g.normal_clearance = cl;
    g.eta = eta;
    g.t0 = std::min(cl, eta);
    if (!(g.t0 > 0)) throw Error("open crack has zero normal clearance");

    for (const auto &b : g.inclusions) g.centers.push_back(b.center());
    return g;
}

bool is_multiple(double x, double step, int *count) {
    double r = x / step;
    double n = std::round(r);
    if (count) *count = int(n);
    return n >= 1 && std::abs(r - n) <= 1e-9 * std::max(1.0, n);
}

LayeredDomain tile_layer(const CellGeometry &cell, const Rect2 &omega, double L, double eps) {
    if (!(eps > 0)) throw Error("eps must be positive");
    if (!(omega.wx > 0 && omega.wy > 0)) throw Error("omega must have positive sides");
    if (!(eps < L)) throw Error("eps must be smaller than the block height L");
    LayeredDomain d;
    d.cell = cell;
    d.omega = omega;
    d.L = L;
    d.eps = eps;
    // eps(xi + Y') inside omega  <=>  eps(i+1) <= wx (tolerant to rounding)
    auto fit = [eps](double w) {
        int n = int(std::floor(w / eps + 1e-9));
        return std::max(n, 0);
    };
    d.nx = fit(omega.wx);
    d.ny = fit(omega.wy);
    for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) d.xi_set.push_back({i, j});
    d.hat_area = double(d.xi_set.size()) * eps * eps;
    d.exact = is_multiple(omega.wx, eps) && is_multiple(omega.wy, eps);
    d.lambda_area = d.exact ? 0.0 : omega.area() - d.hat_area;
    if (d.xi_set.empty()) d.warnings.push_back("no whole cell fits in omega");
    return d;
}

} // namespace layerhom
