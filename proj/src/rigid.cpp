#include "layerhom/rigid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "layerhom/fem.hpp"

namespace layerhom {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Rigid basis at y: columns e_i, e_i ^ (y - O).
Eigen::Matrix<double, 3, 6> basis(const Vec3 &y, const Vec3 &O) {
    Eigen::Matrix<double, 3, 6> B;
    for (int i = 0; i < 3; ++i) {
        B.col(i) = Vec3::Unit(i);
        B.col(3 + i) = Vec3::Unit(i).cross(y - O);
    }
    return B;
}

Eigen::Matrix<double, 8, 3> gather(const VectorXd &u, const HexMesh &layer, int cell, const HexElement &ce) {
    Eigen::Matrix<double, 8, 3> e;
    for (int c = 0; c < 8; ++c) e.row(c) = u.segment<3>(3 * layer.cell_nodes[cell][ce.nodes[c]]).transpose();
    return e;
}

std::vector<int> inclusion_elements(const HexMesh &c, int j) {
    std::vector<int> ids;
    for (int e = 0; e < int(c.elements.size()); ++e)
        if (c.elements[e].region == Region::Inclusion && c.elements[e].inclusion == j - 1) ids.push_back(e);
    if (ids.empty()) throw Error("no inclusion " + std::to_string(j) + " in the mesh");
    return ids;
}

struct Projector {
    Vec3 O;
    std::vector<int> elems;
    Eigen::LDLT<Mat6> gram;

    Projector(const HexMesh &c, int j) : O(inclusion_center(c, j)), elems(inclusion_elements(c, j)) {
        Mat6 G = Mat6::Zero();
        for (int e : elems) {
            HexQuadrature Q = hex_quadrature(c.elements[e].lo, c.elements[e].hi);
            for (int q = 0; q < 8; ++q) {
                auto B = basis(Q.points[q], O);
                G += Q.weight * B.transpose() * B;
            }
        }
        gram.compute(G);
        if (gram.info() != Eigen::Success || gram.vectorD().minCoeff() <= 1e-14 * gram.vectorD().maxCoeff())
            throw Error("degenerate rigid Gram matrix");
    }

    // value(n): displacement at cell-mesh node n
    template <class Value> Vec6 moments(const HexMesh &c, Value value, double *norm2 = nullptr) const {
        Vec6 m = Vec6::Zero();
        double n2 = 0;
        for (int e : elems) {
            const HexElement &ce = c.elements[e];
            HexQuadrature Q = hex_quadrature(ce.lo, ce.hi);
            Eigen::Matrix<double, 8, 3> ue;
            for (int k = 0; k < 8; ++k) ue.row(k) = value(ce.nodes[k]).transpose();
            for (int q = 0; q < 8; ++q) {
                Vec3 v = ue.transpose() * Q.N[q];
                m += Q.weight * basis(Q.points[q], O).transpose() * v;
                n2 += Q.weight * v.squaredNorm();
            }
        }
        if (norm2) *norm2 = n2;
        return m;
    }

    Vec6 moments(const HexMesh &layer, const VectorXd &u, int cell, double *norm2 = nullptr) const {
        return moments(
            *layer.cell_mesh, [&](int n) -> Vec3 { return u.segment<3>(3 * layer.cell_nodes[cell][n]); }, norm2);
    }

    RigidMotion solve(const Vec6 &m) const {
        Vec6 x = gram.solve(m);
        return {x.head<3>(), x.tail<3>()};
    }
};

// Subtract r on the cell-mesh nodes of inclusion j (each node once).
void subtract(VectorXd &u, const HexMesh &layer, int cell, const std::vector<int> &elems, const RigidMotion &r,
              const Vec3 &O) {
    const HexMesh &c = *layer.cell_mesh;
    std::vector<int> nodes;
    for (int e : elems)
        for (int n : c.elements[e].nodes) nodes.push_back(n);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (int n : nodes) u.segment<3>(3 * layer.cell_nodes[cell][n]) -= r(c.nodes[n], O);
}

void require_layer(const HexMesh &layer, const VectorXd &u) {
    if (!layer.cell_mesh || layer.cell_nodes.size() != layer.xi.size()) throw Error("rigid projection needs a layer mesh");
    if (u.size() != layer.num_dofs()) throw Error("state size does not match the mesh");
}

} // namespace

Vec3 inclusion_center(const HexMesh &c, int j) {
    Vec3 s = Vec3::Zero();
    double v = 0;
    for (int e : inclusion_elements(c, j)) {
        double w = c.elements[e].size().prod();
        s += w * 0.5 * (c.elements[e].lo + c.elements[e].hi);
        v += w;
    }
    return s / v;
}

RigidProjection project_rigid(const HexMesh &layer, const VectorXd &u, int j, int cell) {
    require_layer(layer, u);
    if (cell < 0 || cell >= int(layer.xi.size())) throw Error("cell index out of range");
    Projector P(*layer.cell_mesh, j);
    RigidProjection out;
    double n2 = 0;
    out.r = P.solve(P.moments(layer, u, cell, &n2));
    out.u_norm = std::sqrt(n2);
    out.residual = u;
    subtract(out.residual, layer, cell, P.elems, out.r, P.O);
    Vec6 m = P.moments(layer, out.residual, cell);
    for (int i = 0; i < 6; ++i) out.orthogonality[i] = m[i];
    return out;
}

RigidMotion rigid_part(const HexMesh &cell_mesh, const VectorXd &v, int j) {
    if (v.size() != cell_mesh.num_dofs()) throw Error("state size does not match the mesh");
    Projector P(cell_mesh, j);
    return P.solve(P.moments(cell_mesh, [&](int n) -> Vec3 { return v.segment<3>(3 * n); }));
}

RigidField rigid_fields(const HexMesh &layer, const VectorXd &u) {
    require_layer(layer, u);
    const HexMesh &c = *layer.cell_mesh;
    const double eps = layer.eps;
    const int m = c.num_cracks() - 1;
    RigidField F;
    F.eps = eps;
    F.residual = u;
    F.r.resize(m);
    F.diagnostics.resize(m);
    const int ncell = int(layer.xi.size());
    for (int j = 1; j <= m; ++j) {
        Projector P(c, j);
        F.centers.push_back(P.O);
        SmallDomain &d = F.diagnostics[j - 1];
        double res = 0, str = 0, uL1 = 0, surf = 0, aL1 = 0, bL1 = 0;
        for (int x = 0; x < ncell; ++x) {
            RigidMotion r = P.solve(P.moments(layer, u, x));
            F.r[j - 1].push_back(r);
            aL1 += r.a.norm();
            bL1 += r.b.norm();
            for (int e : P.elems) {
                const HexElement &ce = c.elements[e];
                HexQuadrature Q = hex_quadrature(ce.lo, ce.hi);
                auto ue = gather(u, layer, x, ce);
                Eigen::Matrix3d skew;
                skew << 0, -r.b[2], r.b[1], r.b[2], 0, -r.b[0], -r.b[1], r.b[0], 0;
                for (int q = 0; q < 8; ++q) {
                    Vec3 v = ue.transpose() * Q.N[q];
                    Eigen::Matrix3d g = (Q.dN[q] * ue).transpose(); // du_i/dy_j
                    res += Q.weight * ((v - r(Q.points[q], P.O)).squaredNorm() + (g - skew).squaredNorm());
                    str += Q.weight * (0.5 * (g + g.transpose())).squaredNorm();
                    uL1 += Q.weight * v.norm();
                }
            }
            for (const auto &f : c.crack_facets) {
                if (f.crack != j) continue;
                QuadQuadrature Q = quad_quadrature(f.lo, f.hi, f.axis);
                const Vec3 nu = f.normal();
                for (int q = 0; q < 4; ++q) {
                    Vec3 v = Vec3::Zero();
                    for (int k = 0; k < 4; ++k) v += Q.N[q][k] * u.segment<3>(3 * layer.cell_nodes[x][f.plus[k]]);
                    const double vn = v.dot(nu);
                    surf += Q.weight * (std::max(vn, 0.0) + (v - vn * nu).norm());
                }
            }
            subtract(F.residual, layer, x, P.elems, r, P.O);
        }
        // cell integrals scale by eps^3 (volume), eps^2 (surface), eps^2 (omega)
        const double e3 = eps * eps * eps;
        d.residual = e3 * res;
        d.strain = e3 * str;
        d.ratio = str > 0 ? res / str : 0.0;
        d.e_L2 = std::sqrt(eps * str);
        d.a_L1 = eps * eps * aL1;
        d.b_L1 = eps * eps * eps * bL1;
        d.u_L1 = e3 * uL1;
        d.surface = eps * eps * surf;
        const double den_ab = std::sqrt(eps) * d.e_L2 + d.surface;
        const double den_u = std::pow(eps, 1.5) * d.e_L2 + eps * d.surface;
        d.ratio_ab = den_ab > 0 ? (d.a_L1 + d.b_L1) / den_ab : 0.0;
        d.ratio_u = den_u > 0 ? d.u_L1 / den_u : 0.0;
    }
    return F;
}

} // namespace layerhom
