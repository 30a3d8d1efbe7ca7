#include "layerhom/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace layerhom {

namespace {

Vec3 node_jump(const VectorXd &u, const ContactConstraint &c) {
    return u.segment<3>(c.plus) - u.segment<3>(c.minus);
}

// Jump operator on the full vector: 3 rows per contact node.
SpMat jump_operator(const ContactProblem &p) {
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < int(p.nodes.size()); ++k)
        for (int i = 0; i < 3; ++i) {
            t.emplace_back(3 * k + i, p.nodes[k].plus + i, 1.0);
            t.emplace_back(3 * k + i, p.nodes[k].minus + i, -1.0);
        }
    SpMat B(3 * int(p.nodes.size()), p.K.rows());
    B.setFromTriplets(t.begin(), t.end());
    return B;
}

Vec3 prox(const Vec3 &v, const ContactConstraint &c, double rho) {
    const double vn = v.dot(c.normal);
    const Vec3 vt = v - vn * c.normal;
    const double nt = vt.norm();
    const double thr = c.bound / rho;
    Vec3 z = std::min(vn, c.gap) * c.normal;
    if (nt > thr) z += (1 - thr / nt) * vt; // |v_tau| == G/rho counts as stick
    return z;
}

double length_scale(const ContactProblem &p, const VectorXd &u) {
    double s = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
    for (const auto &c : p.nodes) s = std::max(s, c.gap);
    return s > 0 ? s : 1.0;
}

void validate(const ContactProblem &p) {
    const int n = int(p.K.rows());
    if (p.K.cols() != n || p.f.size() != n || p.dofs.full_size() != n) throw Error("inconsistent contact problem sizes");
    for (const auto &c : p.nodes) {
        if (c.plus < 0 || c.minus < 0 || c.plus + 2 >= n || c.minus + 2 >= n) throw Error("contact node outside dof range");
        if (!(c.gap >= 0)) throw Error("negative gap");
        if (!(c.bound > 0)) throw Error("friction bound must be positive");
        if (!(c.weight > 0)) throw Error("contact weight must be positive");
        for (int i = 0; i < 3; ++i) {
            bool pf = p.dofs.is_fixed(c.plus + i), mf = p.dofs.is_fixed(c.minus + i);
            if ((!pf && !p.dofs.is_free_root(c.plus + i)) || (!mf && !p.dofs.is_free_root(c.minus + i)))
                throw Error("contact dofs must not be identified with other dofs");
        }
    }
}

} // namespace

double friction_work(const ContactProblem &p, const VectorXd &u) {
    double s = 0;
    for (const auto &c : p.nodes) {
        Vec3 d = node_jump(u, c);
        s += c.weight * c.bound * (d - d.dot(c.normal) * c.normal).norm();
    }
    return s;
}

double contact_energy(const ContactProblem &p, const VectorXd &u) {
    return 0.5 * u.dot(p.K * u) - p.f.dot(u) + friction_work(p, u);
}

double feasibility_violation(const ContactProblem &p, const VectorXd &u) {
    double v = 0;
    for (const auto &c : p.nodes) v = std::max(v, node_jump(u, c).dot(c.normal) - c.gap);
    return v;
}

VectorXd restore_feasibility(const ContactProblem &p, const VectorXd &u) {
    VectorXd v = u;
    for (const auto &c : p.nodes) {
        const double viol = node_jump(v, c).dot(c.normal) - c.gap;
        if (!(viol > 0)) continue;
        bool plus_free = true, minus_free = true;
        for (int i = 0; i < 3; ++i) {
            plus_free = plus_free && !p.dofs.is_fixed(c.plus + i);
            minus_free = minus_free && !p.dofs.is_fixed(c.minus + i);
        }
        if (plus_free) v.segment<3>(c.plus) -= viol * c.normal;
        else if (minus_free) v.segment<3>(c.minus) += viol * c.normal;
        else throw Error("cannot restore feasibility: both sides of a contact node are fixed");
    }
    return v;
}

ContactSolution minimize(const ContactProblem &p, const SolverOptions &opt, const VectorXd *u0) {
    validate(p);
    const DofMap &D = p.dofs;
    const SpMat Kr = D.reduce(p.K);
    const VectorXd ufix = D.fixed_values();
    const VectorXd fr = D.restrict_sum(p.f - p.K * ufix);
    const int nc = int(p.nodes.size());

    ContactSolution sol;
    if (nc == 0) {
        SpdSolver S(Kr, opt.linear);
        sol.u = D.expand(S.solve(fr));
        sol.report.iterations = 1;
        sol.report.converged = true;
        sol.report.m = contact_energy(p, sol.u);
        sol.report.energy_history = {sol.report.m};
        return sol;
    }

    const SpMat Bf = jump_operator(p);
    const SpMat Br = Bf * D.P();
    const VectorXd b0 = Bf * ufix;
    VectorXd w3(3 * nc);
    double wmean = 0;
    for (int k = 0; k < nc; ++k) {
        w3.segment<3>(3 * k).setConstant(p.nodes[k].weight);
        wmean += p.nodes[k].weight / nc;
    }

    // Penalty scaled to the stiffness seen by the jump dofs.
    double dsum = 0;
    int dcount = 0;
    for (const auto &c : p.nodes)
        for (int i = 0; i < 3; ++i)
            for (int d : {c.plus + i, c.minus + i}) {
                int r = D.reduced_index(d);
                if (r >= 0) { dsum += Kr.coeff(r, r); ++dcount; }
            }
    const double rho = opt.rho_factor * (dcount ? dsum / dcount : 1.0) / wmean;
    if (!(rho > 0) || !std::isfinite(rho)) throw Error("invalid penalty parameter");

    const SpMat BtW = Br.transpose() * w3.asDiagonal();
    const SpMat A = Kr + rho * SpMat(BtW * Br);
    SpdSolver S(A, opt.linear);

    VectorXd r = u0 ? D.pick(*u0) : VectorXd::Zero(D.reduced_size());
    VectorXd Bu = Br * r + b0;
    VectorXd z(3 * nc), y = VectorXd::Zero(3 * nc);
    for (int k = 0; k < nc; ++k) z.segment<3>(3 * k) = prox(Bu.segment<3>(3 * k), p.nodes[k], rho);

    const double alpha = opt.relaxation;
    const double fnorm = fr.norm();
    double best = std::numeric_limits<double>::infinity(), last = best;
    VectorXd best_u, best_y = y;
    SolveReport &rep = sol.report;
    rep.rho = rho;
    int it = 0;
    for (it = 1; it <= opt.max_iter; ++it) {
        r = S.solve(fr + rho * (BtW * (z - y - b0)));
        Bu = Br * r + b0;
        const VectorXd zold = z;
        const VectorXd vh = alpha * Bu + (1 - alpha) * zold;
        for (int k = 0; k < nc; ++k)
            z.segment<3>(3 * k) = prox(vh.segment<3>(3 * k) + y.segment<3>(3 * k), p.nodes[k], rho);
        y += vh - z;

        if (it % opt.check_every != 0 && it != opt.max_iter) continue;
        if (!r.allFinite() || !y.allFinite()) throw Error("contact solver diverged (check scaling)");
        const VectorXd u = D.expand(r);
        const double L = length_scale(p, u);
        const double primal = (Bu - z).cwiseAbs().maxCoeff() / L;
        const double dual = rho * (BtW * (z - zold)).norm() / std::max({fnorm, rho * (BtW * y).norm(), 1e-300});
        const VectorXd ur = restore_feasibility(p, u);
        const double E = contact_energy(p, ur);
        if (!std::isfinite(E)) throw Error("contact solver diverged (check scaling)");
        if (E < best) {
            best = E;
            best_u = ur;
            best_y = y;
        }
        rep.energy_history.push_back(best);
        const double change = std::isfinite(last) ? std::abs(E - last) / std::max({std::abs(E), std::abs(last), 1e-300})
                                                  : std::numeric_limits<double>::infinity();
        last = E;
        rep.primal_residual = primal;
        rep.dual_residual = dual;
        if (primal <= opt.tol_feas && dual <= opt.tol_dual && change <= opt.tol_energy) {
            rep.converged = true;
            break;
        }
    }
    rep.iterations = std::min(it, opt.max_iter);
    sol.u = best_u;
    rep.m = best;
    rep.feasibility = feasibility_violation(p, sol.u);
    sol.traction.resize(nc);
    for (int k = 0; k < nc; ++k) sol.traction[k] = -rho * best_y.segment<3>(3 * k);
    return sol;
}

ViResult vi_residual(const ContactProblem &p, const VectorXd &u, int samples, std::uint64_t seed,
                     const std::vector<VectorXd> &extra) {
    const double L = length_scale(p, u);
    if (feasibility_violation(p, u) > 1e-9 * L) throw Error("vi_residual needs a feasible state");
    const VectorXd grad = p.K * u - p.f;
    const double psi_u = friction_work(p, u);
    auto residual = [&](const VectorXd &v) { return grad.dot(v - u) + friction_work(p, v) - psi_u; };

    ViResult out;
    out.scale = std::max({std::abs(p.f.dot(u)), u.dot(p.K * u), psi_u, 1e-300});
    out.min_residual = 0; // v = u
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    const DofMap &D = p.dofs;
    const double T = std::max(u.cwiseAbs().maxCoeff(), 1e-12);
    for (int s = 0; s < samples; ++s) {
        VectorXd d(D.reduced_size());
        for (int i = 0; i < d.size(); ++i) d[i] = N(rng);
        d /= std::max(d.cwiseAbs().maxCoeff(), 1e-300);
        const double t = T * std::pow(10.0, -6.0 + 6.0 * s / std::max(1, samples - 1));
        VectorXd v = restore_feasibility(p, u + t * (D.P() * d));
        out.min_residual = std::min(out.min_residual, residual(v));
        ++out.samples;
    }
    const VectorXd zero = D.expand(VectorXd::Zero(D.reduced_size()));
    if (feasibility_violation(p, zero) <= 0) {
        out.min_residual = std::min(out.min_residual, residual(zero));
        ++out.samples;
    }
    for (const auto &v : extra) {
        if (feasibility_violation(p, v) > 1e-9 * L) continue;
        out.min_residual = std::min(out.min_residual, residual(v));
        ++out.samples;
    }
    out.normalized = out.min_residual / out.scale;
    return out;
}

KktReport check_kkt(const ContactProblem &p, const ContactSolution &s, double tol_comp, double tol_slip_dir) {
    KktReport r;
    const VectorXd &u = s.u;
    const double L = length_scale(p, u);
    double smax = 0;
    for (const auto &t : s.traction) smax = std::max(smax, t.norm());
    r.feasibility = feasibility_violation(p, u);
    r.comp_scale = std::max(smax * L, 1e-300);
    const double slip_tol = 1e-6 * L;
    for (int k = 0; k < int(p.nodes.size()); ++k) {
        const auto &c = p.nodes[k];
        const Vec3 d = node_jump(u, c);
        const Vec3 &sig = s.traction[k];
        const double jn = d.dot(c.normal), sn = sig.dot(c.normal);
        const Vec3 jt = d - jn * c.normal, st = sig - sn * c.normal;
        r.max_sigma_normal = std::max(r.max_sigma_normal, sn);
        r.comp_normal = std::max(r.comp_normal, std::abs(sn * (jn - c.gap)));
        r.max_traction_ratio = std::max(r.max_traction_ratio, st.norm() / c.bound);
        if (jt.norm() > slip_tol) {
            ++r.slip;
            r.comp_tangential = std::max(r.comp_tangential, (st / c.bound + jt / jt.norm()).norm());
        } else {
            ++r.stick;
            r.comp_tangential = std::max(r.comp_tangential, st.norm() / c.bound - 1.0);
        }
    }
    // f - K u is balanced by the contact reactions w_k sigma_k.
    VectorXd react = VectorXd::Zero(u.size());
    for (int k = 0; k < int(p.nodes.size()); ++k) {
        react.segment<3>(p.nodes[k].plus) += p.nodes[k].weight * s.traction[k];
        react.segment<3>(p.nodes[k].minus) -= p.nodes[k].weight * s.traction[k];
    }
    const VectorXd res = p.dofs.restrict_sum(p.K * u - p.f - react);
    r.equilibrium = res.norm() / std::max({p.dofs.restrict_sum(p.f).norm(), p.dofs.restrict_sum(react).norm(), 1e-300});
    r.ok = r.feasibility <= 1e-10 * L && r.comp_normal <= tol_comp * r.comp_scale &&
           r.max_sigma_normal <= tol_comp * std::max(smax, 1e-300) && r.comp_tangential <= tol_slip_dir;
    return r;
}

} // namespace layerhom
