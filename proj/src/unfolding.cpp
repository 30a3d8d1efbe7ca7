#include "layerhom/unfolding.hpp"

#include <algorithm>
#include <cmath>

#include "layerhom/fem.hpp"

namespace layerhom {

namespace {

void require_layer(const HexMesh &layer) {
    if (!layer.cell_mesh || layer.cell_nodes.size() != layer.xi.size()) throw Error("field not defined on the layer");
}

Eigen::Matrix<double, 8, Eigen::Dynamic> gather(const VectorXd &v, const std::array<int, 8> &nodes, int ncomp) {
    Eigen::Matrix<double, 8, Eigen::Dynamic> e(8, ncomp);
    for (int c = 0; c < 8; ++c)
        for (int k = 0; k < ncomp; ++k) e(c, k) = v[ncomp * nodes[c] + k];
    return e;
}

Eigen::Vector4d facet_values(const VectorXd &v, const std::array<int, 4> &nodes, int ncomp, int comp) {
    Eigen::Vector4d r;
    for (int k = 0; k < 4; ++k) r[k] = v[ncomp * nodes[k] + comp];
    return r;
}

double facet_power(const CrackFacet &f, const Eigen::Vector4d &vals, int p) {
    QuadQuadrature Q = quad_quadrature(f.lo, f.hi, f.axis);
    double s = 0;
    for (int q = 0; q < 4; ++q) {
        double v = Q.N[q].dot(vals);
        s += Q.weight * (p == 0 ? v : std::pow(std::abs(v), p));
    }
    return s;
}

void check_crack(const HexMesh &m, int crack) {
    if (crack < 0 || crack >= m.num_cracks()) throw Error("unknown crack id");
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

} // namespace

UnfoldedField unfold(const HexMesh &layer, const VectorXd &field, int ncomp) {
    require_layer(layer);
    if (ncomp < 1 || field.size() != ncomp * layer.num_nodes()) throw Error("field not defined on the layer");
    UnfoldedField U;
    U.eps = layer.eps;
    U.ncomp = ncomp;
    U.cell_mesh = layer.cell_mesh;
    const int nn = layer.cell_mesh->num_nodes();
    U.cells.resize(layer.xi.size());
    for (size_t x = 0; x < layer.xi.size(); ++x) {
        VectorXd &v = U.cells[x];
        v.resize(ncomp * nn);
        for (int i = 0; i < nn; ++i)
            for (int k = 0; k < ncomp; ++k) v[ncomp * i + k] = field[ncomp * layer.cell_nodes[x][i] + k];
    }
    return U;
}

FacetTrace facet_trace(const HexMesh &mesh, const VectorXd &field, int ncomp, int comp, bool plus_side) {
    if (field.size() != ncomp * mesh.num_nodes() || comp < 0 || comp >= ncomp) throw Error("trace: field size mismatch");
    FacetTrace t(mesh.crack_facets.size());
    for (size_t f = 0; f < t.size(); ++f) {
        const auto &F = mesh.crack_facets[f];
        t[f] = facet_values(field, plus_side ? F.plus : F.minus, ncomp, comp);
    }
    return t;
}

UnfoldedTrace unfold_boundary(const HexMesh &layer, const FacetTrace &trace, int crack) {
    require_layer(layer);
    check_crack(layer, crack);
    if (trace.size() != layer.crack_facets.size()) throw Error("trace not defined on the layer cracks");
    UnfoldedTrace T;
    T.eps = layer.eps;
    T.crack = crack;
    T.cell_mesh = layer.cell_mesh;
    T.cells.assign(layer.xi.size(), FacetTrace(layer.cell_mesh->crack_facets.size(), Eigen::Vector4d::Zero()));
    for (size_t f = 0; f < trace.size(); ++f) {
        const auto &F = layer.crack_facets[f];
        if (F.crack == crack) T.cells[F.cell][F.local] = trace[f];
    }
    return T;
}

UnfoldedTrace trace_of(const UnfoldedField &U, int crack, int comp, bool plus_side) {
    const HexMesh &c = *U.cell_mesh;
    check_crack(c, crack);
    UnfoldedTrace T;
    T.eps = U.eps;
    T.crack = crack;
    T.cell_mesh = U.cell_mesh;
    T.cells.assign(U.cells.size(), FacetTrace(c.crack_facets.size(), Eigen::Vector4d::Zero()));
    for (size_t x = 0; x < U.cells.size(); ++x)
        for (size_t f = 0; f < c.crack_facets.size(); ++f) {
            const auto &F = c.crack_facets[f];
            if (F.crack == crack) T.cells[x][f] = facet_values(U.cells[x], plus_side ? F.plus : F.minus, U.ncomp, comp);
        }
    return T;
}

double layer_integral(const HexMesh &layer, const VectorXd &phi, int ncomp, int comp) {
    double s = 0;
    for (const auto &el : layer.elements) {
        if (el.cell < 0) continue;
        HexQuadrature Q = hex_quadrature(el.lo, el.hi);
        auto e = gather(phi, el.nodes, ncomp);
        for (int q = 0; q < 8; ++q) s += Q.weight * Q.N[q].dot(e.col(comp));
    }
    return s;
}

double layer_l2(const HexMesh &layer, const VectorXd &phi) {
    const int ncomp = int(phi.size() / std::max(1, layer.num_nodes()));
    double s = 0;
    for (const auto &el : layer.elements) {
        if (el.cell < 0) continue;
        HexQuadrature Q = hex_quadrature(el.lo, el.hi);
        auto e = gather(phi, el.nodes, ncomp);
        for (int q = 0; q < 8; ++q) s += Q.weight * (Q.N[q].transpose() * e).squaredNorm();
    }
    return std::sqrt(s);
}

double unfolded_integral(const UnfoldedField &U, int comp) {
    const HexMesh &c = *U.cell_mesh;
    double s = 0;
    for (const auto &v : U.cells)
        for (const auto &el : c.elements) {
            HexQuadrature Q = hex_quadrature(el.lo, el.hi);
            auto e = gather(v, el.nodes, U.ncomp);
            for (int q = 0; q < 8; ++q) s += Q.weight * Q.N[q].dot(e.col(comp));
        }
    return U.eps * U.eps * U.eps * s;
}

double unfolded_l2(const UnfoldedField &U) {
    const HexMesh &c = *U.cell_mesh;
    double s = 0;
    for (const auto &v : U.cells)
        for (const auto &el : c.elements) {
            HexQuadrature Q = hex_quadrature(el.lo, el.hi);
            auto e = gather(v, el.nodes, U.ncomp);
            for (int q = 0; q < 8; ++q) s += Q.weight * (Q.N[q].transpose() * e).squaredNorm();
        }
    return std::sqrt(U.eps * U.eps * s);
}

double trace_integral(const HexMesh &layer, const FacetTrace &psi, int crack) {
    check_crack(layer, crack);
    double s = 0;
    for (size_t f = 0; f < psi.size(); ++f)
        if (layer.crack_facets[f].crack == crack) s += facet_power(layer.crack_facets[f], psi[f], 0);
    return s;
}

double trace_norm(const HexMesh &layer, const FacetTrace &psi, int crack, int p) {
    check_crack(layer, crack);
    double s = 0;
    for (size_t f = 0; f < psi.size(); ++f)
        if (layer.crack_facets[f].crack == crack) s += facet_power(layer.crack_facets[f], psi[f], p);
    return std::pow(s, 1.0 / p);
}

double unfolded_trace_integral(const UnfoldedTrace &T) {
    const HexMesh &c = *T.cell_mesh;
    double s = 0;
    for (const auto &cell : T.cells)
        for (size_t f = 0; f < cell.size(); ++f)
            if (c.crack_facets[f].crack == T.crack) s += facet_power(c.crack_facets[f], cell[f], 0);
    return T.eps * T.eps * s;
}

double unfolded_trace_norm(const UnfoldedTrace &T, int p) {
    const HexMesh &c = *T.cell_mesh;
    double s = 0;
    for (const auto &cell : T.cells)
        for (size_t f = 0; f < cell.size(); ++f)
            if (c.crack_facets[f].crack == T.crack) s += facet_power(c.crack_facets[f], cell[f], p);
    return std::pow(T.eps * T.eps * s, 1.0 / p);
}

GradientResidual check_gradient_identity(const HexMesh &layer, const VectorXd &field, int ncomp) {
    UnfoldedField U = unfold(layer, field, ncomp);
    const HexMesh &c = *layer.cell_mesh;
    GradientResidual r;
    for (const auto &el : layer.elements) {
        if (el.cell < 0) continue;
        const HexElement &ce = c.elements[el.local];
        HexQuadrature Qx = hex_quadrature(el.lo, el.hi), Qy = hex_quadrature(ce.lo, ce.hi);
        auto ex = gather(field, el.nodes, ncomp);
        auto ey = gather(U.cells[el.cell], ce.nodes, ncomp);
        for (int q = 0; q < 8; ++q) {
            Eigen::MatrixXd gx = layer.eps * (Qx.dN[q] * ex); // 3 x ncomp
            Eigen::MatrixXd gy = Qy.dN[q] * ey;
            r.gradient = std::max(r.gradient, (gy - gx).cwiseAbs().maxCoeff());
            r.scale = std::max(r.scale, gx.cwiseAbs().maxCoeff());
            if (ncomp == 3) {
                Eigen::Matrix3d sx = 0.5 * (gx + gx.transpose()), sy = 0.5 * (gy + gy.transpose());
                r.strain = std::max(r.strain, (sy - sx).cwiseAbs().maxCoeff());
            }
        }
    }
    return r;
}

double UnfoldReport::max_residual() const {
    double m = 0;
    for (const auto &r : residuals) m = std::max(m, r.second);
    return m;
}

UnfoldReport unfold_check(const HexMesh &layer, const VectorXd &u) {
    UnfoldReport rep;
    rep.eps = layer.eps;
    UnfoldedField U = unfold(layer, u, 3);
    // signed integrals are measured against the integral of |u|: a field of
    // zero mean would otherwise turn summation roundoff into O(1) "errors"
    const VectorXd au = u.cwiseAbs();
    auto rel_to = [](double a, double b, double s) { return std::abs(a - b) / std::max({s, std::abs(a), 1e-300}); };
    double item1 = 0;
    for (int k = 0; k < 3; ++k)
        item1 = std::max(item1, rel_to(layer_integral(layer, u, 3, k), unfolded_integral(U, k),
                                       layer_integral(layer, au, 3, k)));
    rep.residuals.emplace_back("integral", item1);
    rep.residuals.emplace_back("l2_norm", rel(layer_l2(layer, u), std::sqrt(layer.eps) * unfolded_l2(U)));
    GradientResidual g = check_gradient_identity(layer, u, 3);
    const double gs = std::max(g.scale, 1e-300);
    rep.residuals.emplace_back("gradient", g.gradient / gs);
    rep.residuals.emplace_back("strain", g.strain / gs);
    double item4 = 0, p1 = 0, p2 = 0, remark = 0;
    for (int j = 0; j < layer.num_cracks(); ++j)
        for (int k = 0; k < 3; ++k) {
            FacetTrace psi = facet_trace(layer, u, 3, k, true);
            UnfoldedTrace T = unfold_boundary(layer, psi, j);
            FacetTrace apsi = psi;
            for (auto &v : apsi) v = v.cwiseAbs();
            item4 = std::max(item4, rel_to(trace_integral(layer, psi, j), unfolded_trace_integral(T),
                                           trace_integral(layer, apsi, j)));
            p1 = std::max(p1, rel(trace_norm(layer, psi, j, 1), unfolded_trace_norm(T, 1)));
            p2 = std::max(p2, rel(trace_norm(layer, psi, j, 2), unfolded_trace_norm(T, 2)));
            UnfoldedTrace V = trace_of(U, j, k, true);
            for (size_t x = 0; x < T.cells.size(); ++x)
                for (size_t f = 0; f < T.cells[x].size(); ++f)
                    remark = std::max(remark, (T.cells[x][f] - V.cells[x][f]).cwiseAbs().maxCoeff());
        }
    rep.residuals.emplace_back("surface_integral", item4);
    rep.residuals.emplace_back("surface_l1", p1);
    rep.residuals.emplace_back("surface_l2", p2);
    rep.residuals.emplace_back("trace_commutes", remark / std::max(u.cwiseAbs().maxCoeff(), 1e-300));
    return rep;
}

} // namespace layerhom
