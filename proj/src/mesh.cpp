#include "layerhom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace layerhom {

const char *region_name(Region r) {
    switch (r) {
    case Region::BlockB: return "block_b";
    case Region::BlockA: return "block_a";
    case Region::Matrix: return "matrix";
    case Region::Inclusion: return "inclusion";
    }
    return "?";
}

InclusionMode parse_inclusion_mode(const std::string &s) {
    if (s == "contact") return InclusionMode::Contact;
    if (s == "glued") return InclusionMode::Glued;
    if (s == "hole") return InclusionMode::Hole;
    throw Error("unknown inclusion mode '" + s + "' (contact|glued|hole)");
}

const char *inclusion_mode_name(InclusionMode m) {
    switch (m) {
    case InclusionMode::Contact: return "contact";
    case InclusionMode::Glued: return "glued";
    case InclusionMode::Hole: return "hole";
    }
    return "?";
}

int HexMesh::num_cracks() const {
    int m = 0;
    for (const auto &f : crack_facets) m = std::max(m, f.crack);
    for (const auto &e : elements)
        if (e.region == Region::Inclusion) m = std::max(m, e.inclusion + 1);
    return m + 1;
}

std::vector<int> HexMesh::nodes_with_grid(int axis, int index) const {
    std::vector<int> out;
    for (int i = 0; i < num_nodes(); ++i)
        if (node_grid[i][axis] == index) out.push_back(i);
    return out;
}

std::vector<int> HexMesh::nodes_on_plane(int axis, bool upper) const {
    const std::vector<double> *g[3] = {&xs, &ys, &zs};
    return nodes_with_grid(axis, upper ? int(g[axis]->size()) - 1 : 0);
}

std::vector<int> HexMesh::element_ids(Region r) const {
    std::vector<int> out;
    for (int e = 0; e < int(elements.size()); ++e)
        if (elements[e].region == r) out.push_back(e);
    return out;
}

namespace {

struct Tag {
    bool exists = false;
    Region region = Region::Matrix;
    int inclusion = -1;
    int cell = -1;
    int local = -1;
    std::array<int, 3> local_grid{}; // grid index inside the cell (layer elements)
};

struct Face {
    enum Kind { Merge, Crack, Split } kind = Merge;
    int crack = 0;
    bool lower_plus = true;
};

using FaceFn = std::function<Face(int axis, const Tag &lower, const Tag &upper)>;

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) {
        while (p[x] != x) { p[x] = p[p[x]]; x = p[x]; }
        return x;
    }
    void unite(int a, int b) {
        a = find(a); b = find(b);
        if (a != b) p[std::max(a, b)] = std::min(a, b);
    }
};

HexMesh build_structured(const std::vector<double> &xs, const std::vector<double> &ys,
                         const std::vector<double> &zs, const std::vector<Tag> &tags,
                         const FaceFn &face_fn) {
    const int nx = int(xs.size()) - 1, ny = int(ys.size()) - 1, nz = int(zs.size()) - 1;
    auto gid = [&](int i, int j, int k) { return i + nx * (j + ny * k); };

    HexMesh m;
    m.xs = xs; m.ys = ys; m.zs = zs;
    std::vector<int> elem_at(tags.size(), -1);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Tag &t = tags[gid(i, j, k)];
                if (!t.exists) continue;
                HexElement e;
                e.region = t.region;
                e.inclusion = t.inclusion;
                e.cell = t.cell;
                e.local = t.local;
                e.grid = {i, j, k};
                e.lo = Vec3(xs[i], ys[j], zs[k]);
                e.hi = Vec3(xs[i + 1], ys[j + 1], zs[k + 1]);
                elem_at[gid(i, j, k)] = int(m.elements.size());
                m.elements.push_back(e);
            }

    const int ne = int(m.elements.size());
    UnionFind uf(8 * ne);
    struct PendingFace { int lower, upper, axis; Face f; };
    std::vector<PendingFace> special;
    for (int e = 0; e < ne; ++e) {
        auto g = m.elements[e].grid;
        for (int a = 0; a < 3; ++a) {
            auto h = g;
            h[a] += 1;
            if (h[0] >= nx || h[1] >= ny || h[2] >= nz) continue;
            int n = elem_at[gid(h[0], h[1], h[2])];
            if (n < 0) continue;
            Face f = face_fn(a, tags[gid(g[0], g[1], g[2])], tags[gid(h[0], h[1], h[2])]);
            if (f.kind == Face::Merge) {
                for (int c = 0; c < 8; ++c)
                    if (c & (1 << a)) uf.unite(8 * e + c, 8 * n + (c - (1 << a)));
            } else {
                special.push_back({e, n, a, f});
            }
        }
    }

    std::vector<int> id(8 * ne, -1);
    for (int e = 0; e < ne; ++e)
        for (int c = 0; c < 8; ++c) {
            int r = uf.find(8 * e + c);
            if (id[r] < 0) {
                id[r] = m.num_nodes();
                auto g = m.elements[e].grid;
                auto o = corner_offset(c);
                std::array<int, 3> q = {g[0] + o[0], g[1] + o[1], g[2] + o[2]};
                m.nodes.emplace_back(xs[q[0]], ys[q[1]], zs[q[2]]);
                m.node_grid.push_back(q);
            }
            m.elements[e].nodes[c] = id[r];
        }

    for (const auto &pf : special) {
        const auto &lo = m.elements[pf.lower];
        const auto &up = m.elements[pf.upper];
        std::array<int, 4> below{}, above{};
        int k = 0;
        for (int c = 0; c < 8; ++c) {
            if (!(c & (1 << pf.axis))) continue;
            below[k] = lo.nodes[c];
            above[k] = up.nodes[c - (1 << pf.axis)];
            ++k;
        }
        Vec3 flo = lo.lo, fhi = lo.hi;
        flo[pf.axis] = fhi[pf.axis];
        double area = 1;
        for (int a = 0; a < 3; ++a)
            if (a != pf.axis) area *= fhi[a] - flo[a];
        if (pf.f.kind == Face::Crack) {
            CrackFacet cf;
            cf.axis = pf.axis;
            cf.sign = pf.f.lower_plus ? 1 : -1;
            cf.plus = pf.f.lower_plus ? below : above;
            cf.minus = pf.f.lower_plus ? above : below;
            cf.crack = pf.f.crack;
            cf.cell = lo.cell;
            cf.lower_element = pf.lower;
            cf.area = area;
            cf.lo = flo;
            cf.hi = fhi;
            m.crack_facets.push_back(cf);
        } else {
            SplitFacet sf;
            sf.axis = pf.axis;
            sf.below = below;
            sf.above = above;
            sf.area = area;
            sf.lo = flo;
            sf.hi = fhi;
            m.split_facets.push_back(sf);
        }
    }
    return m;
}

struct CellLayout {
    int n = 0;
    InclusionMode mode = InclusionMode::Contact;
    std::vector<std::array<int, 6>> inc; // integer box indices
    std::vector<std::array<int, 6>> cracks;
    std::vector<int> crack_axis;
};

int to_index(double v, int n) {
    double r = v * n;
    long q = std::lround(r);
    if (std::abs(r - double(q)) > 1e-9 * std::max(1.0, double(n))) throw Error("incompatible subdivision");
    return int(q);
}

CellLayout layout(const CellGeometry &cell, int n, InclusionMode mode) {
    if (n < 1) throw Error("subdivision count must be positive");
    CellLayout L;
    L.n = n;
    L.mode = mode;
    auto conv = [n](const Box &b) {
        return std::array<int, 6>{to_index(b.lo[0], n), to_index(b.lo[1], n), to_index(b.lo[2], n),
                                  to_index(b.hi[0], n), to_index(b.hi[1], n), to_index(b.hi[2], n)};
    };
    for (const auto &b : cell.inclusions) L.inc.push_back(conv(b));
    for (const auto &c : cell.open_cracks) {
        L.cracks.push_back(conv(c));
        L.crack_axis.push_back(c.planar_axis());
    }
    return L;
}

// Classification of cell element (i,j,k); cell and local are filled by callers.
Tag cell_tag(const CellLayout &L, int i, int j, int k) {
    Tag t;
    t.exists = true;
    t.region = Region::Matrix;
    t.local_grid = {i, j, k};
    for (int q = 0; q < int(L.inc.size()); ++q) {
        const auto &b = L.inc[q];
        if (i >= b[0] && i < b[3] && j >= b[1] && j < b[4] && k >= b[2] && k < b[5]) {
            if (L.mode == InclusionMode::Hole) t.exists = false;
            t.region = Region::Inclusion;
            t.inclusion = q;
        }
    }
    return t;
}

Face cell_face(const CellLayout &L, int axis, const Tag &lo, const Tag &up) {
    Face f;
    bool li = lo.region == Region::Inclusion, ui = up.region == Region::Inclusion;
    if (li != ui) {
        if (L.mode == InclusionMode::Contact) {
            f.kind = Face::Crack;
            f.crack = (li ? lo.inclusion : up.inclusion) + 1;
            f.lower_plus = li;
        }
        return f;
    }
    if (li) return f;
    const auto &g = lo.local_grid;
    for (int q = 0; q < int(L.cracks.size()); ++q) {
        if (L.crack_axis[q] != axis) continue;
        const auto &c = L.cracks[q];
        if (g[axis] + 1 != c[axis]) continue;
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
            if (a == axis) continue;
            if (g[a] < c[a] || g[a] + 1 > c[a + 3]) inside = false;
        }
        if (inside) {
            f.kind = Face::Crack;
            f.crack = 0;
            f.lower_plus = true;
            return f;
        }
    }
    return f;
}

std::vector<double> uniform(double a, double b, int n) {
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = a + (b - a) * double(i) / double(n);
    v[n] = b;
    return v;
}

} // namespace

HexMesh mesh_cell(const CellGeometry &cell, int n, InclusionMode mode) {
    CellLayout L = layout(cell, n, mode);
    std::vector<Tag> tags(size_t(n) * n * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) tags[i + n * (j + n * k)] = cell_tag(L, i, j, k);
    auto g = uniform(0, 1, n);
    HexMesh m = build_structured(g, g, g, tags,
                                 [&L](int a, const Tag &lo, const Tag &up) { return cell_face(L, a, lo, up); });
    m.eps = 1;
    m.n_cell = n;
    for (int e = 0; e < int(m.elements.size()); ++e) m.elements[e].local = e;
    for (int f = 0; f < int(m.crack_facets.size()); ++f) m.crack_facets[f].local = f;

    // Lateral faces never carry cracks (eta > 0), so each boundary grid point
    // owns exactly one node.
    std::map<std::array<int, 3>, int> at;
    for (int i = 0; i < m.num_nodes(); ++i) {
        const auto &q = m.node_grid[i];
        if (q[0] == 0 || q[0] == n || q[1] == 0 || q[1] == n) at[q] = i;
    }
    m.periodic_master.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) {
        auto q = m.node_grid[i];
        q[0] %= n;
        q[1] %= n;
        m.periodic_master[i] = (q == m.node_grid[i]) ? i : at.at(q);
    }
    return m;
}

std::vector<double> graded_sizes(double total, double h0, int n) {
    if (n < 1) throw Error("block grading needs at least one element layer");
    if (h0 * n >= total) return std::vector<double>(n, total / n);
    auto sum = [&](double r) {
        double s = 0, h = h0;
        for (int i = 0; i < n; ++i) { s += h; h *= r; }
        return s;
    };
    double lo = 1, hi = 2;
    while (sum(hi) < total) hi *= 2;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (sum(mid) < total ? lo : hi) = mid;
    }
    std::vector<double> s(n);
    double h = h0;
    for (int i = 0; i < n; ++i) { s[i] = h; h *= lo; }
    return s;
}

HexMesh mesh_assembly(const LayeredDomain &d, int n_cell, int n_block, InclusionMode mode) {
    if (!d.exact) throw Error("exact tiling required");
    CellLayout L = layout(d.cell, n_cell, mode);
    auto cell = std::make_shared<HexMesh>(mesh_cell(d.cell, n_cell, mode));
    const double h = d.eps / n_cell;

    std::vector<double> xs = uniform(0, d.omega.wx, d.nx * n_cell);
    std::vector<double> ys = uniform(0, d.omega.wy, d.ny * n_cell);
    std::vector<double> zs;
    auto below = graded_sizes(d.L, h, n_block);
    double z = 0;
    std::vector<double> zb{0};
    for (double s : below) { z -= s; zb.push_back(z); }
    zb.back() = -d.L;
    zs.assign(zb.rbegin(), zb.rend());
    const int kb = int(zs.size()) - 1; // first layer element index
    for (int k = 1; k <= n_cell; ++k) zs.push_back(d.eps * double(k) / n_cell);
    zs.back() = d.eps;
    auto above = graded_sizes(d.L - d.eps, h, n_block);
    z = d.eps;
    for (double s : above) { z += s; zs.push_back(z); }
    zs.back() = d.L;

    const int nx = int(xs.size()) - 1, ny = int(ys.size()) - 1, nz = int(zs.size()) - 1;
    std::vector<int> local_at(size_t(n_cell) * n_cell * n_cell, -1);
    for (const auto &e : cell->elements)
        local_at[e.grid[0] + n_cell * (e.grid[1] + n_cell * e.grid[2])] = e.local;

    std::vector<Tag> tags(size_t(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                Tag t;
                if (k < kb) {
                    t.exists = true;
                    t.region = Region::BlockB;
                } else if (k >= kb + n_cell) {
                    t.exists = true;
                    t.region = Region::BlockA;
                } else {
                    int li = i % n_cell, lj = j % n_cell, lk = k - kb;
                    t = cell_tag(L, li, lj, lk);
                    t.cell = d.cell_index(i / n_cell, j / n_cell);
                    t.local = local_at[li + n_cell * (lj + n_cell * lk)];
                }
                tags[i + nx * (j + ny * k)] = t;
            }

    HexMesh m = build_structured(xs, ys, zs, tags, [&L](int a, const Tag &lo, const Tag &up) {
        if (lo.cell < 0 || up.cell < 0 || lo.cell != up.cell) return Face{};
        return cell_face(L, a, lo, up);
    });
    m.eps = d.eps;
    m.n_cell = n_cell;
    m.xi = d.xi_set;

    m.cell_nodes.assign(d.num_cells(), std::vector<int>(cell->num_nodes(), -1));
    for (const auto &e : m.elements) {
        if (e.local < 0) continue;
        const auto &ce = cell->elements[e.local];
        for (int c = 0; c < 8; ++c) {
            int &slot = m.cell_nodes[e.cell][ce.nodes[c]];
            if (slot >= 0 && slot != e.nodes[c]) throw Error("inconsistent cell/layer node map");
            slot = e.nodes[c];
        }
    }
    std::map<std::pair<int, int>, int> facet_key;
    for (const auto &f : cell->crack_facets) facet_key[{f.axis, f.lower_element}] = f.local;
    for (auto &f : m.crack_facets) f.local = facet_key.at({f.axis, m.elements[f.lower_element].local});
    m.cell_mesh = cell;
    return m;
}

HexMesh mesh_blocks(const Rect2 &omega, double L, double h, int n_block) {
    int nx = 0, ny = 0;
    if (!is_multiple(omega.wx, h, &nx) || !is_multiple(omega.wy, h, &ny))
        throw Error("block spacing must divide omega");
    auto xs = uniform(0, omega.wx, nx);
    auto ys = uniform(0, omega.wy, ny);
    auto sizes = graded_sizes(L, h, n_block);
    std::vector<double> zb{0};
    double z = 0;
    for (double s : sizes) { z -= s; zb.push_back(z); }
    zb.back() = -L;
    std::vector<double> zs(zb.rbegin(), zb.rend());
    const int kb = int(zs.size()) - 1;
    z = 0;
    for (double s : sizes) { z += s; zs.push_back(z); }
    zs.back() = L;
    const int nz = int(zs.size()) - 1;
    std::vector<Tag> tags(size_t(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                Tag &t = tags[i + nx * (j + ny * k)];
                t.exists = true;
                t.region = k < kb ? Region::BlockB : Region::BlockA;
            }
    HexMesh m = build_structured(xs, ys, zs, tags, [](int a, const Tag &lo, const Tag &up) {
        Face f;
        if (a == 2 && lo.region == Region::BlockB && up.region == Region::BlockA) f.kind = Face::Split;
        return f;
    });
    m.eps = 0;
    return m;
}

Jump jump(const Eigen::VectorXd &u, const CrackFacet &f, int k) {
    Vec3 d = u.segment<3>(3 * f.plus[k]) - u.segment<3>(3 * f.minus[k]);
    Vec3 n = f.normal();
    Jump j;
    j.normal = d.dot(n);
    j.tangential = d - j.normal * n;
    return j;
}

std::vector<ContactNode> lumped_contact_nodes(const HexMesh &mesh) {
    std::vector<ContactNode> out;
    std::map<std::tuple<int, int, int>, int> index;
    for (const auto &f : mesh.crack_facets) {
        for (int k = 0; k < 4; ++k) {
            if (f.plus[k] == f.minus[k]) continue; // bonded crack rim
            auto key = std::make_tuple(f.plus[k], f.minus[k], f.axis);
            auto it = index.find(key);
            if (it == index.end()) {
                ContactNode c;
                c.plus = f.plus[k];
                c.minus = f.minus[k];
                c.axis = f.axis;
                c.sign = f.sign;
                c.crack = f.crack;
                c.cell = f.cell;
                c.x = mesh.nodes[f.plus[k]];
                it = index.emplace(key, int(out.size())).first;
                out.push_back(c);
            }
            out[it->second].weight += 0.25 * f.area;
        }
    }
    return out;
}

} // namespace layerhom
