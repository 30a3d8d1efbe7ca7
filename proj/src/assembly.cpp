#include "layerhom/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace layerhom {

void Material::validate(const std::string &name) const {
    if (!(mu > 0) || !(3 * lambda + 2 * mu > 0) || !std::isfinite(lambda) || !std::isfinite(mu))
        throw Error("singular material '" + name + "': need mu > 0 and 3 lambda + 2 mu > 0");
}

const Material &MaterialSet::of(Region r) const {
    switch (r) {
    case Region::BlockA: return a;
    case Region::BlockB: return b;
    case Region::Matrix: return matrix;
    case Region::Inclusion: return inclusion;
    }
    throw Error("untagged element");
}

void MaterialSet::validate() const {
    a.validate("a");
    b.validate("b");
    matrix.validate("matrix");
    inclusion.validate("inclusion");
}

double MaterialSet::coercivity() const { return 2 * std::min({a.mu, b.mu, matrix.mu, inclusion.mu}); }

double RegionWeights::of(Region r) const {
    switch (r) {
    case Region::BlockA: return a;
    case Region::BlockB: return b;
    case Region::Matrix: return matrix;
    case Region::Inclusion: return inclusion;
    }
    return 0;
}

Vec24 element_values(const VectorXd &u, const HexElement &e) {
    Vec24 ue;
    for (int c = 0; c < 8; ++c) ue.segment<3>(3 * c) = u.segment<3>(3 * e.nodes[c]);
    return ue;
}

namespace {

using ElementFn = std::function<Mat24(const Vec3 &size, const HexElement &e)>;

// Element matrices depend only on size and region, so they are cached.
SpMat assemble(const HexMesh &mesh, const ElementFn &fn) {
    const int n = mesh.num_dofs();
    std::map<std::array<long long, 4>, Mat24> cache;
    SpMat A(n, n);
    std::vector<Eigen::Triplet<double>> t;
    const int chunk = 2048;
    t.reserve(size_t(chunk) * 576);
    for (size_t e0 = 0; e0 < mesh.elements.size(); e0 += chunk) {
        t.clear();
        const size_t e1 = std::min(mesh.elements.size(), e0 + chunk);
        for (size_t e = e0; e < e1; ++e) {
            const auto &el = mesh.elements[e];
            const Vec3 s = el.size();
            std::array<long long, 4> key = {std::llround(s[0] * 1e12), std::llround(s[1] * 1e12),
                                            std::llround(s[2] * 1e12), (long long)el.region};
            auto it = cache.find(key);
            if (it == cache.end()) it = cache.emplace(key, fn(s, el)).first;
            const Mat24 &K = it->second;
            for (int a = 0; a < 8; ++a)
                for (int i = 0; i < 3; ++i)
                    for (int b = 0; b < 8; ++b)
                        for (int j = 0; j < 3; ++j) {
                            double v = K(3 * a + i, 3 * b + j);
                            if (v != 0) t.emplace_back(3 * el.nodes[a] + i, 3 * el.nodes[b] + j, v);
                        }
        }
        SpMat B(n, n);
        B.setFromTriplets(t.begin(), t.end());
        if (e0 == 0) A = B;
        else A += B;
    }
    A.makeCompressed();
    return A;
}

} // namespace

SpMat assemble_stiffness(const HexMesh &mesh, const MaterialSet &mat, double eps) {
    if (std::abs(eps - mesh.eps) > 1e-12 * std::max(1.0, eps)) throw Error("eps does not match the mesh");
    mat.validate();
    return assemble(mesh, [&](const Vec3 &s, const HexElement &e) -> Mat24 {
        const Material &m = mat.of(e.region);
        return region_scale(e.region, eps) * hex_stiffness(s, m.lambda, m.mu);
    });
}

SpMat assemble_strain_form(const HexMesh &mesh, const RegionWeights &w) {
    return assemble(mesh, [&](const Vec3 &s, const HexElement &e) -> Mat24 {
        return w.of(e.region) * hex_stiffness(s, 0.0, 0.5);
    });
}

SpMat assemble_mass(const HexMesh &mesh, const RegionWeights &w) {
    return assemble(mesh, [&](const Vec3 &s, const HexElement &e) -> Mat24 { return w.of(e.region) * hex_mass(s); });
}

SpMat assemble_gradient_form(const HexMesh &mesh, const RegionWeights &w) {
    return assemble(mesh,
                    [&](const Vec3 &s, const HexElement &e) -> Mat24 { return w.of(e.region) * hex_laplacian(s); });
}

std::array<Eigen::Matrix3d, 8> strain(const VectorXd &u, const HexMesh &mesh, int e) {
    const auto &el = mesh.elements.at(e);
    HexQuadrature Q = hex_quadrature(el.lo, el.hi);
    Vec24 ue = element_values(u, el);
    std::array<Eigen::Matrix3d, 8> out;
    for (int q = 0; q < 8; ++q) out[q] = hex_strain(Q, q, ue);
    return out;
}

namespace {

// Cell coordinates and in-plane cell origin of a layer point.
void cell_coordinates(const HexMesh &mesh, int cell, const Vec3 &x, double xp[2], Vec3 &y) {
    if (cell < 0) {
        xp[0] = xp[1] = 0;
        y = x;
        return;
    }
    const auto &xi = mesh.xi[cell];
    xp[0] = mesh.eps * xi[0];
    xp[1] = mesh.eps * xi[1];
    y = Vec3((x[0] - xp[0]) / mesh.eps, (x[1] - xp[1]) / mesh.eps, x[2] / mesh.eps);
}

} // namespace

VectorXd assemble_load(const HexMesh &mesh, const Loads &loads, double eps) {
    VectorXd b = VectorXd::Zero(mesh.num_dofs());
    int n_inc = 0;
    for (const auto &e : mesh.elements)
        if (e.region == Region::Inclusion) n_inc = std::max(n_inc, e.inclusion + 1);
    for (int j = 0; j < int(loads.F.size()); ++j)
        if (j >= n_inc && !loads.F[j].is_zero()) throw Error("F^j nonzero outside its inclusion");
    const bool has_f = !loads.f.is_zero();
    for (const auto &el : mesh.elements) {
        const bool inc = el.region == Region::Inclusion;
        if (inc) {
            if (el.inclusion >= int(loads.F.size()) || loads.F[el.inclusion].is_zero()) continue;
        } else if (!has_f || !loads.f_regions[int(el.region)]) {
            continue;
        }
        HexQuadrature Q = hex_quadrature(el.lo, el.hi);
        for (int q = 0; q < 8; ++q) {
            Vec3 force;
            if (inc) {
                double z[5];
                Vec3 y;
                cell_coordinates(mesh, el.cell, Q.points[q], z, y);
                z[2] = y[0]; z[3] = y[1]; z[4] = y[2];
                force = loads.F[el.inclusion](z) / eps;
            } else {
                force = loads.f(Q.points[q].data());
            }
            for (int c = 0; c < 8; ++c) b.segment<3>(3 * el.nodes[c]) += Q.weight * Q.N[q](c) * force;
        }
    }
    return b;
}

VectorXd assemble_traction(const HexMesh &mesh, int axis, bool upper, const Vec3 &t) {
    VectorXd b = VectorXd::Zero(mesh.num_dofs());
    const std::vector<double> *g[3] = {&mesh.xs, &mesh.ys, &mesh.zs};
    const int last = int(g[axis]->size()) - 2;
    for (const auto &el : mesh.elements) {
        if (el.grid[axis] != (upper ? last : 0)) continue;
        double area = 1;
        for (int a = 0; a < 3; ++a)
            if (a != axis) area *= el.hi[a] - el.lo[a];
        for (int c = 0; c < 8; ++c)
            if (bool((c >> axis) & 1) == upper) b.segment<3>(3 * el.nodes[c]) += 0.25 * area * t;
    }
    return b;
}

std::vector<NodalContact> evaluate_contact(const HexMesh &mesh, const std::vector<CrackData> &data) {
    std::vector<NodalContact> out;
    for (const auto &c : lumped_contact_nodes(mesh)) {
        if (c.crack >= int(data.size())) throw Error("missing contact data for crack " + std::to_string(c.crack));
        const CrackData &d = data[c.crack];
        NodalContact n;
        n.node = c;
        double z[5];
        cell_coordinates(mesh, c.cell, c.x, z, n.y);
        z[2] = n.y[0]; z[3] = n.y[1]; z[4] = n.y[2];
        n.gap = d.g(n.y.data());
        n.bound = d.G(z);
        if (!(n.gap >= 0)) throw Error("negative gap on crack " + std::to_string(c.crack));
        if (!(n.bound > 0)) throw Error("friction bound must be positive on crack " + std::to_string(c.crack));
        if (d.M > 0 && n.bound < d.M) throw Error("friction bound below M on crack " + std::to_string(c.crack));
        out.push_back(n);
    }
    return out;
}

std::vector<double> friction_lower_bounds(const std::vector<NodalContact> &nodes, const std::vector<CrackData> &data,
                                          int n_cracks) {
    std::vector<double> M(n_cracks, std::numeric_limits<double>::infinity());
    for (int j = 0; j < n_cracks && j < int(data.size()); ++j)
        if (data[j].M > 0) M[j] = data[j].M;
    for (const auto &n : nodes)
        if (!(n.node.crack < int(data.size()) && data[n.node.crack].M > 0))
            M[n.node.crack] = std::min(M[n.node.crack], n.bound);
    return M;
}

EnergyBreakdown measures(const HexMesh &mesh, const MaterialSet &mat, const VectorXd &f,
                         const std::vector<NodalContact> &contact, const VectorXd &u) {
    EnergyBreakdown r;
    const double eps = mesh.eps;
    double xi2 = 0;
    for (const auto &el : mesh.elements) {
        HexQuadrature Q = hex_quadrature(el.lo, el.hi);
        Vec24 ue = element_values(u, el);
        const Material &m = mat.of(el.region);
        const double s = region_scale(el.region, eps);
        double energy = 0, ee = 0;
        for (int q = 0; q < 8; ++q) {
            Eigen::Matrix3d e = hex_strain(Q, q, ue);
            const double tr = e.trace(), ss = e.squaredNorm();
            energy += Q.weight * (2 * m.mu * ss + m.lambda * tr * tr);
            ee += Q.weight * ss;
        }
        energy *= s;
        xi2 += s * ee;
        switch (el.region) {
        case Region::BlockA: r.elastic_a += energy; break;
        case Region::BlockB: r.elastic_b += energy; break;
        case Region::Matrix: r.elastic_matrix += energy; break;
        case Region::Inclusion: r.elastic_inclusions += energy; break;
        }
    }
    r.friction.assign(mesh.num_cracks(), 0.0);
    for (const auto &c : contact) {
        const Vec3 n = c.node.normal();
        const Vec3 d = u.segment<3>(3 * c.node.plus) - u.segment<3>(3 * c.node.minus);
        const double jn = d.dot(n);
        const double jt = (d - jn * n).norm();
        if (c.node.crack >= int(r.friction.size())) r.friction.resize(c.node.crack + 1, 0.0);
        r.friction[c.node.crack] += c.node.weight * c.bound * jt;
        if (c.node.crack >= 1) r.eta += c.node.weight * (std::max(jn, 0.0) + jt);
    }
    r.load_work = f.dot(u);
    r.xi = std::sqrt(xi2);
    r.M_value = r.xi + r.eta;
    r.E_value = xi2 + r.eta;
    double fr = 0;
    for (double v : r.friction) fr += v;
    r.total = 0.5 * (r.elastic_a + r.elastic_b + r.elastic_matrix + r.elastic_inclusions) + fr - r.load_work;
    return r;
}

std::vector<int> gamma_nodes(const HexMesh &mesh, const std::vector<std::string> &faces) {
    std::vector<char> on(mesh.num_nodes(), 0);
    const int nx = int(mesh.xs.size()) - 1, ny = int(mesh.ys.size()) - 1;
    for (const auto &face : faces) {
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            const auto &q = mesh.node_grid[i];
            const bool lower = mesh.nodes[i][2] <= 0;
            bool hit = false;
            if (face == "bottom") hit = q[2] == 0;
            else if (face == "x0") hit = lower && q[0] == 0;
            else if (face == "x1") hit = lower && q[0] == nx;
            else if (face == "y0") hit = lower && q[1] == 0;
            else if (face == "y1") hit = lower && q[1] == ny;
            else throw Error("unknown Gamma face '" + face + "' (bottom|x0|x1|y0|y1)");
            if (hit) on[i] = 1;
        }
    }
    std::vector<int> out;
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (on[i]) out.push_back(i);
    if (out.empty()) throw Error("Gamma is empty");
    return out;
}

} // namespace layerhom
