#include "layerhom/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace layerhom {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_scaled(Triplets &t, const SpMat &A, int offset, double w) {
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            t.emplace_back(offset + int(it.row()), offset + int(it.col()), w * it.value());
}

void add_coupling(Triplets &t, const std::vector<SigmaNode> &sigma, const Eigen::Matrix3d &H) {
    for (const auto &s : sigma)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double v = s.weight * H(i, j);
                if (v == 0) continue;
                t.emplace_back(3 * s.above + i, 3 * s.above + j, v);
                t.emplace_back(3 * s.below + i, 3 * s.below + j, v);
                t.emplace_back(3 * s.above + i, 3 * s.below + j, -v);
                t.emplace_back(3 * s.below + i, 3 * s.above + j, -v);
            }
}

// Gamma on Omega^b only: the upper copies of the split nodes belong to Omega^a.
void fix_blocks(DofMap &D, const HexMesh &B, const std::vector<SigmaNode> &sigma, const BlockSetup &s) {
    std::vector<char> above(B.num_nodes(), 0);
    for (const auto &n : sigma) above[n.above] = 1;
    for (int i : gamma_nodes(B, s.gamma))
        if (!above[i])
            for (int c = 0; c < 3; ++c) D.fix(3 * i + c);
    if (!s.test_bc.enabled) return;
    const int nx = int(B.xs.size()) - 1, ny = int(B.ys.size()) - 1;
    for (int i = 0; i < B.num_nodes(); ++i) {
        const auto &q = B.node_grid[i];
        const bool on[4] = {q[0] == 0, q[0] == nx, q[1] == 0, q[1] == ny};
        for (int f = 0; f < 4; ++f)
            if (on[f])
                for (int c : s.test_bc.lateral_fixed[f]) {
                    if (c < 0 || c > 2) throw Error("test_bc component out of range");
                    D.fix(3 * i + c);
                }
    }
}

VectorXd block_load(const HexMesh &B, const BlockSetup &s) {
    for (const auto &F : s.loads.F)
        if (!F.is_zero()) throw Error("inclusion loads need the unfolded limit problem");
    Loads l = s.loads;
    l.F.clear();
    VectorXd b = assemble_load(B, l, 0.0);
    if (s.test_bc.enabled) b += assemble_traction(B, 2, true, s.test_bc.top_traction);
    return b;
}

double elastic(const HexMesh &B, const MaterialSet &mat, const VectorXd &u, Region r) {
    double e = 0;
    for (const auto &el : B.elements) {
        if (el.region != r) continue;
        const Material &m = mat.of(r);
        Vec24 ue = element_values(u, el);
        e += 0.5 * ue.dot(hex_stiffness(el.size(), m.lambda, m.mu) * ue);
    }
    return e;
}

} // namespace

CorrectorSet solve_correctors(std::shared_ptr<const HexMesh> cell, const MaterialSet &mat, LinearSolverKind linear) {
    const HexMesh &c = *cell;
    if (c.periodic_master.size() != c.nodes.size()) throw Error("correctors need a cell mesh");
    for (const auto &e : c.elements)
        if (e.region != Region::Matrix && e.region != Region::Inclusion) throw Error("correctors need a cell mesh");
    const SpMat K = assemble_stiffness(c, mat, 1.0);
    const int n = c.n_cell;
    CorrectorSet out;
    out.cell = cell;
    for (int i = 0; i < 3; ++i) {
        DofMap D(c.num_dofs());
        for (int v = 0; v < c.num_nodes(); ++v) {
            const int z = c.node_grid[v][2];
            if (z == 0 || z == n) {
                for (int k = 0; k < 3; ++k) D.fix(3 * v + k, (z == n && k == i) ? 1.0 : 0.0);
            } else if (c.periodic_master[v] != v) {
                for (int k = 0; k < 3; ++k) D.tie(3 * v + k, 3 * c.periodic_master[v] + k);
            }
        }
        D.finalize();
        const SpMat Kr = D.reduce(K);
        const VectorXd rhs = -D.restrict_sum(K * D.fixed_values());
        SpdSolver S(Kr, linear);
        out.chi[i] = D.expand(S.solve(rhs));
        out.residual[i] = D.restrict_sum(K * out.chi[i]).norm() / std::max(rhs.norm(), 1e-300);
    }
    out.H = effective_H(out, mat);
    return out;
}

Eigen::Matrix3d effective_H(const CorrectorSet &c, const MaterialSet &mat) {
    const SpMat K = assemble_stiffness(*c.cell, mat, 1.0);
    Eigen::Matrix3d H;
    for (int i = 0; i < 3; ++i) {
        const VectorXd Kc = K * c.chi[i];
        for (int j = i; j < 3; ++j) H(i, j) = H(j, i) = c.chi[j].dot(Kc);
    }
    return H;
}

std::vector<SigmaNode> sigma_nodes(const HexMesh &B) {
    std::map<std::pair<int, int>, int> index;
    std::vector<SigmaNode> out;
    for (const auto &f : B.split_facets)
        for (int k = 0; k < 4; ++k) {
            auto key = std::make_pair(f.below[k], f.above[k]);
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, int(out.size())).first;
                SigmaNode s;
                s.below = f.below[k];
                s.above = f.above[k];
                s.x = B.nodes[f.below[k]];
                out.push_back(s);
            }
            out[it->second].weight += 0.25 * f.area;
        }
    if (out.empty()) throw Error("block mesh has no Sigma");
    return out;
}

TransmissionResult solve_transmission(const BlockSetup &s, const Eigen::Matrix3d &H, LinearSolverKind linear) {
    TransmissionResult r;
    r.mesh = mesh_blocks(s.omega, s.L, s.h, s.n_block);
    const HexMesh &B = r.mesh;
    r.sigma = sigma_nodes(B);
    Triplets t;
    add_scaled(t, assemble_stiffness(B, s.materials, 0.0), 0, 1.0);
    add_coupling(t, r.sigma, H);
    SpMat K(B.num_dofs(), B.num_dofs());
    K.setFromTriplets(t.begin(), t.end());
    const VectorXd b = block_load(B, s);
    DofMap D(B.num_dofs());
    fix_blocks(D, B, r.sigma, s);
    D.finalize();
    const VectorXd rhs = D.restrict_sum(b - K * D.fixed_values());
    SpdSolver S(D.reduce(K), linear);
    r.u = D.expand(S.solve(rhs));
    r.residual = D.restrict_sum(K * r.u - b).norm() / std::max(rhs.norm(), 1e-300);
    r.elastic_b = elastic(B, s.materials, r.u, Region::BlockB);
    r.elastic_a = elastic(B, s.materials, r.u, Region::BlockA);
    for (const auto &n : r.sigma) {
        Vec3 d = r.u.segment<3>(3 * n.above) - r.u.segment<3>(3 * n.below);
        r.interface += 0.5 * n.weight * d.dot(H * d);
    }
    r.load_work = b.dot(r.u);
    r.m = r.elastic_a + r.elastic_b + r.interface - r.load_work;
    return r;
}

std::vector<VectorXd> reconstruct_layer(const CorrectorSet &c, const std::vector<Vec3> &ua,
                                        const std::vector<Vec3> &ub) {
    if (ua.size() != ub.size()) throw Error("trace sizes differ");
    const HexMesh &cell = *c.cell;
    std::vector<VectorXd> out(ua.size());
    for (size_t k = 0; k < ua.size(); ++k) {
        VectorXd v(cell.num_dofs());
        for (int n = 0; n < cell.num_nodes(); ++n) v.segment<3>(3 * n) = ub[k];
        for (int i = 0; i < 3; ++i) v += (ua[k][i] - ub[k][i]) * c.chi[i];
        out[k] = v;
    }
    return out;
}

VectorXd LimitState::copy(int k) const {
    const int nc = cell->num_dofs();
    return solution.u.segment(block_dofs + k * nc, nc);
}

LimitState solve_unfolded_limit(const LimitSetup &s, const SolverOptions &opt) {
    LimitState L;
    L.blocks = mesh_blocks(s.blocks.omega, s.blocks.L, s.blocks.h, s.blocks.n_block);
    const HexMesh &B = L.blocks;
    L.cell = std::make_shared<HexMesh>(mesh_cell(s.cell, s.n_cell, s.mode));
    const HexMesh &c = *L.cell;
    L.sigma = sigma_nodes(B);
    const int nb = B.num_dofs(), nc = c.num_dofs(), S = int(L.sigma.size());
    const int N = nb + S * nc;
    L.block_dofs = nb;

    Loads bl = s.blocks.loads;
    bl.F.clear();
    BlockSetup bs = s.blocks;
    bs.loads = bl;

    const SpMat Kb = assemble_stiffness(B, s.blocks.materials, 0.0);
    const SpMat Kc = assemble_stiffness(c, s.blocks.materials, 1.0);
    Triplets t;
    t.reserve(size_t(Kb.nonZeros()) + size_t(S) * Kc.nonZeros());
    add_scaled(t, Kb, 0, 1.0);
    for (int k = 0; k < S; ++k) add_scaled(t, Kc, nb + k * nc, L.sigma[k].weight);
    ContactProblem &p = L.problem;
    p.K.resize(N, N);
    p.K.setFromTriplets(t.begin(), t.end());
    t.clear();
    t.shrink_to_fit();

    p.f = VectorXd::Zero(N);
    p.f.head(nb) = block_load(B, bs);
    const auto &F = s.blocks.loads.F;
    for (int k = 0; k < S; ++k) {
        const double w = L.sigma[k].weight;
        for (const auto &el : c.elements) {
            if (el.region != Region::Inclusion || el.inclusion >= int(F.size()) || F[el.inclusion].is_zero()) continue;
            HexQuadrature Q = hex_quadrature(el.lo, el.hi);
            for (int q = 0; q < 8; ++q) {
                const Vec3 &y = Q.points[q];
                double z[5] = {L.sigma[k].x[0], L.sigma[k].x[1], y[0], y[1], y[2]};
                const Vec3 force = F[el.inclusion](z);
                for (int a = 0; a < 8; ++a) p.f.segment<3>(nb + k * nc + 3 * el.nodes[a]) += w * Q.weight * Q.N[q](a) * force;
            }
        }
    }

    p.dofs = DofMap(N);
    fix_blocks(p.dofs, B, L.sigma, bs);
    const int n = c.n_cell;
    for (int k = 0; k < S; ++k) {
        const int off = nb + k * nc;
        for (int v = 0; v < c.num_nodes(); ++v) {
            const int z = c.node_grid[v][2];
            int target = -1;
            if (z == 0) target = 3 * L.sigma[k].below;
            else if (z == n) target = 3 * L.sigma[k].above;
            else if (c.periodic_master[v] != v) target = off + 3 * c.periodic_master[v];
            if (target >= 0)
                for (int a = 0; a < 3; ++a) p.dofs.tie(off + 3 * v + a, target + a);
        }
    }
    p.dofs.finalize();

    const auto nodes = lumped_contact_nodes(c);
    for (int k = 0; k < S; ++k)
        for (const auto &cn : nodes) {
            if (cn.crack >= int(s.cracks.size())) throw Error("missing contact data for crack " + std::to_string(cn.crack));
            const CrackData &d = s.cracks[cn.crack];
            double z[5] = {L.sigma[k].x[0], L.sigma[k].x[1], cn.x[0], cn.x[1], cn.x[2]};
            ContactConstraint cc;
            cc.plus = nb + k * nc + 3 * cn.plus;
            cc.minus = nb + k * nc + 3 * cn.minus;
            cc.normal = cn.normal();
            cc.weight = L.sigma[k].weight * cn.weight;
            cc.gap = d.g(cn.x.data());
            cc.bound = d.G(z);
            cc.crack = cn.crack;
            cc.group = k;
            if (d.M > 0 && cc.bound < d.M) throw Error("friction bound below M on crack " + std::to_string(cn.crack));
            p.nodes.push_back(cc);
        }

    L.solution = minimize(p, opt);
    L.m = L.solution.report.m;
    const VectorXd &u = L.solution.u;
    L.friction = friction_work(p, u);
    L.load_work = p.f.dot(u);
    const VectorXd ub = u.head(nb);
    L.elastic_blocks = 0.5 * ub.dot(Kb * ub);
    L.elastic_layer = 0;
    for (int k = 0; k < S; ++k) {
        const VectorXd v = u.segment(nb + k * nc, nc);
        L.elastic_layer += 0.5 * L.sigma[k].weight * v.dot(Kc * v);
    }
    const int m = c.num_cracks() - 1;
    L.s.assign(m, {});
    for (int j = 1; j <= m; ++j) {
        bool present = false;
        for (const auto &e : c.elements) present = present || (e.region == Region::Inclusion && e.inclusion == j - 1);
        if (!present) continue;
        for (int k = 0; k < S; ++k) L.s[j - 1].push_back(rigid_part(c, L.copy(k), j));
    }
    return L;
}

} // namespace layerhom
