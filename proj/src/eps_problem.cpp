#include "layerhom/eps_problem.hpp"

#include <algorithm>
#include <cmath>

namespace layerhom {

EpsSystem build_eps_system(const EpsSetup &s) {
    EpsSystem sys;
    sys.materials = s.materials;
    sys.domain = tile_layer(s.cell, s.omega, s.L, s.eps);
    sys.mesh = mesh_assembly(sys.domain, s.n_cell, s.n_block, s.mode);
    const HexMesh &m = sys.mesh;
    const int ncr = std::max<int>(m.num_cracks(), int(s.cracks.size()));

    ContactProblem &p = sys.problem;
    p.K = assemble_stiffness(m, s.materials, s.eps);
    p.f = assemble_load(m, s.loads, s.eps);
    p.dofs = DofMap(m.num_dofs());
    for (int i : gamma_nodes(m, s.gamma))
        for (int c = 0; c < 3; ++c) p.dofs.fix(3 * i + c);
    p.dofs.finalize();

    sys.contact = evaluate_contact(m, s.cracks);
    for (const auto &n : sys.contact) {
        ContactConstraint c;
        c.plus = 3 * n.node.plus;
        c.minus = 3 * n.node.minus;
        c.normal = n.node.normal();
        c.weight = n.node.weight;
        c.gap = n.gap;
        c.bound = n.bound;
        c.crack = n.node.crack;
        c.group = n.node.cell;
        p.nodes.push_back(c);
    }
    sys.M_lower = friction_lower_bounds(sys.contact, s.cracks, ncr);
    sys.g_L1.assign(ncr, 0.0);
    for (const auto &n : sys.contact) sys.g_L1[n.node.crack] += n.node.weight * n.gap;

    double f2 = 0;
    for (const auto &el : m.elements) {
        HexQuadrature Q = hex_quadrature(el.lo, el.hi);
        if (el.region == Region::Inclusion) {
            if (el.inclusion >= int(s.loads.F.size()) || s.loads.F[el.inclusion].is_zero()) continue;
            const auto &xi = m.xi[el.cell];
            for (int q = 0; q < 8; ++q) {
                const Vec3 &x = Q.points[q];
                double z[5] = {s.eps * xi[0], s.eps * xi[1], x[0] / s.eps - xi[0], x[1] / s.eps - xi[1], x[2] / s.eps};
                sys.F_sup = std::max(sys.F_sup, s.loads.F[el.inclusion](z).norm());
            }
        } else if (s.loads.f_regions[int(el.region)]) {
            for (int q = 0; q < 8; ++q) f2 += Q.weight * s.loads.f(Q.points[q].data()).squaredNorm();
        }
    }
    sys.f_L2 = std::sqrt(f2);
    return sys;
}

EnergyBreakdown eps_measures(const EpsSystem &s, const VectorXd &u) {
    return measures(s.mesh, s.materials, s.problem.f, s.contact, u);
}

BoundCheck bound_check(const EpsSystem &s, const VectorXd &u) {
    BoundCheck b;
    b.M_value = eps_measures(s, u).M_value;
    b.data = s.F_sup + s.f_L2;
    for (double g : s.g_L1) b.data += g;
    b.ratio = b.data > 0 ? b.M_value / b.data : 0.0;
    double inv = 0;
    for (size_t k = 1; k < s.M_lower.size(); ++k)
        if (std::isfinite(s.M_lower[k]) && s.M_lower[k] > 0) inv = std::max(inv, 1.0 / s.M_lower[k]);
    b.cond = b.data * inv;
    return b;
}

} // namespace layerhom
