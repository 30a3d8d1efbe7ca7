#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "json.hpp"
#include "layerhom/harness.hpp"
#include "layerhom/unfolding.hpp"

using namespace layerhom;
using json = nlohmann::ordered_json;

namespace {

struct Args {
    std::string config, out, vtk, dump_mesh;
    bool json = false;
};

// inf/nan are not JSON numbers
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix(const Eigen::Matrix3d &H) {
    json a = json::array();
    for (int i = 0; i < 3; ++i) a.push_back({H(i, 0), H(i, 1), H(i, 2)});
    return a;
}

std::string sibling(const std::string &path, const std::string &ext) {
    std::string s = path;
    const size_t slash = s.find_last_of('/'), dot = s.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) s.erase(dot);
    return s + ext;
}

bool all_pass(const json &checks) {
    for (const auto &c : checks) if (!c.get<bool>()) return false;
    return true;
}

// Writes the report, prints it or a summary, returns the exit code.
int finish(const Args &a, json rep, const std::string &summary) {
    rep["pass"] = all_pass(rep["checks"]);
    const std::string text = rep.dump(2) + "\n";
    if (!a.out.empty()) write_text(a.out, text);
    if (a.json) std::cout << text;
    else {
        std::cout << summary;
        for (auto it = rep["checks"].begin(); it != rep["checks"].end(); ++it)
            std::cout << "  check " << it.key() << ": " << (it.value().get<bool>() ? "pass" : "FAIL") << "\n";
    }
    return rep["pass"].get<bool>() ? 0 : 1;
}

std::string line(const char *f, double a, double b = NAN, double c = NAN) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

int cmd_cell(const Args &a) {
    const ExperimentConfig c = load_config(a.config);
    const InclusionMode m = c.mode == InclusionMode::Glued ? InclusionMode::Glued : InclusionMode::Hole;
    auto cell = std::make_shared<const HexMesh>(mesh_cell(c.cell, c.cell_n, m));
    const CorrectorSet cs = solve_correctors(cell, c.materials, c.solver.linear);
    const Eigen::Matrix3d &H = cs.H;
    const double asym = (H - H.transpose()).cwiseAbs().maxCoeff(), scale = H.cwiseAbs().maxCoeff();
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(H).eigenvalues().minCoeff();
    double res = 0;
    for (double r : cs.residual) res = std::max(res, r);

    json rep;
    rep["H"] = matrix(H);
    rep["corrector_energies"] = {H(0, 0), H(1, 1), H(2, 2)};
    rep["residuals"] = {cs.residual[0], cs.residual[1], cs.residual[2]};
    rep["min_eigenvalue"] = lmin;
    rep["mesh"] = {{"n", c.cell_n}, {"mode", inclusion_mode_name(m)}, {"nodes", cell->num_nodes()},
                   {"elements", cell->elements.size()}, {"dofs", cell->num_dofs()}};
    rep["checks"] = {{"symmetric", asym <= 1e-14 * scale}, {"spd", lmin > 0}, {"galerkin", res <= 1e-10}};
    if (!a.out.empty()) {
        std::string csv;
        for (int i = 0; i < 3; ++i) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", H(i, 0), H(i, 1), H(i, 2));
            csv += buf;
        }
        write_text(sibling(a.out, ".csv"), csv);
    }
    if (!a.dump_mesh.empty()) write_vtk(a.dump_mesh, *cell);
    return finish(a, rep,
                  line("H diag = (%.10g, %.10g, %.10g)\n", H(0, 0), H(1, 1), H(2, 2)) +
                      line("min eigenvalue %.6g, max Galerkin residual %.3g\n", lmin, res));
}

int cmd_solve_eps(const Args &a) {
    const ExperimentConfig c = load_config(a.config);
    const double eps = c.single_eps();
    const EpsSystem sys = build_eps_system(c.eps_setup(eps, c.mode));
    const ContactSolution sol = minimize(sys.problem, c.solver);
    const KktReport k = check_kkt(sys.problem, sol);
    const ViResult vi = vi_residual(sys.problem, sol.u, c.vi_samples, c.seed);
    const BoundCheck b = bound_check(sys, sol.u);
    const EnergyBreakdown e = eps_measures(sys, sol.u);

    json rep;
    rep["eps"] = eps;
    rep["dofs"] = sys.mesh.num_dofs();
    rep["contact_nodes"] = sys.problem.nodes.size();
    rep["iterations"] = sol.report.iterations;
    rep["converged"] = sol.report.converged;
    rep["m_eps"] = sol.report.m;
    rep["residuals"] = {{"vi", vi.normalized},       {"feas", k.feasibility},     {"comp_n", k.comp_normal},
                        {"comp_scale", k.comp_scale}, {"comp_t", k.comp_tangential}, {"equilibrium", k.equilibrium}};
    rep["stick"] = k.stick;
    rep["slip"] = k.slip;
    rep["bound_ratio"] = b.ratio;
    rep["bound"] = {{"M", b.M_value}, {"data", b.data}, {"cond", b.cond}};
    json fr = json::array();
    for (double f : e.friction) fr.push_back(f);
    rep["energy_breakdown"] = {{"elastic_b", e.elastic_b},
                               {"elastic_a", e.elastic_a},
                               {"elastic_matrix", e.elastic_matrix},
                               {"elastic_inclusions", e.elastic_inclusions},
                               {"friction", fr},
                               {"load_work", e.load_work},
                               {"total", e.total}};
    json checks = {{"converged", sol.report.converged},
                   {"feasible", k.feasibility <= c.solver.tol_feas},
                   {"vi_certificate", vi.normalized >= -c.checks.vi_tol}};
    if (!sys.problem.nodes.empty()) checks["kkt"] = k.ok;
    rep["checks"] = checks;

    std::string vtk = a.vtk;
    if (vtk.empty() && c.vtk && !a.out.empty()) vtk = sibling(a.out, ".vtk");
    if (!vtk.empty()) write_vtk(vtk, sys.mesh, &sol.u);
    if (!a.dump_mesh.empty()) write_vtk(a.dump_mesh, sys.mesh);
    return finish(a, rep,
                  line("eps %g: m_eps = %.12g", eps, sol.report.m) +
                      line(" (%g dofs, %g iterations)\n", sys.mesh.num_dofs(), sol.report.iterations) +
                      line("VI residual %.3g, bound ratio %.6g\n", vi.normalized, b.ratio));
}

int cmd_solve_limit(const Args &a) {
    const ExperimentConfig c = load_config(a.config);
    std::string method = c.limit;
    if (method == "auto" || method == "none") method = c.mode == InclusionMode::Contact ? "unfolded" : "transmission";
    const int n = c.limit_n_cell > 0 ? c.limit_n_cell : c.n_cell;
    json rep;
    rep["method"] = method;
    rep["spacing"] = c.limit_spacing();
    if (method == "transmission") {
        const InclusionMode m = c.mode == InclusionMode::Glued ? InclusionMode::Glued : InclusionMode::Hole;
        const CorrectorSet cs =
            solve_correctors(std::make_shared<const HexMesh>(mesh_cell(c.cell, n, m)), c.materials, c.solver.linear);
        const TransmissionResult t = solve_transmission(c.block_setup(), cs.H, c.solver.linear);
        rep["m"] = t.m;
        rep["dofs"] = t.mesh.num_dofs();
        rep["H"] = matrix(cs.H);
        rep["energy_breakdown"] = {{"elastic_b", t.elastic_b}, {"elastic_a", t.elastic_a},
                                   {"interface", t.interface}, {"load_work", t.load_work}};
        rep["residuals"] = {{"galerkin", t.residual}};
        rep["checks"] = {{"galerkin", t.residual <= 1e-10}};
        if (!a.dump_mesh.empty()) write_vtk(a.dump_mesh, t.mesh);
        if (!a.vtk.empty()) write_vtk(a.vtk, t.mesh, &t.u);
        return finish(a, rep, line("transmission limit: m = %.12g\n", t.m));
    }
    LimitSetup s;
    s.blocks = c.block_setup();
    s.cell = c.cell;
    s.n_cell = n;
    s.mode = c.mode;
    s.cracks = c.cracks;
    const LimitState st = solve_unfolded_limit(s, c.solver);
    const KktReport k = check_kkt(st.problem, st.solution);
    rep["m"] = st.m;
    rep["dofs"] = st.problem.K.rows();
    rep["iterations"] = st.solution.report.iterations;
    rep["energy_breakdown"] = {{"elastic_blocks", st.elastic_blocks}, {"elastic_layer", st.elastic_layer},
                               {"friction", st.friction}, {"load_work", st.load_work}};
    rep["residuals"] = {{"feas", k.feasibility}, {"comp_n", k.comp_normal}, {"comp_t", k.comp_tangential},
                        {"equilibrium", k.equilibrium}};
    json checks = {{"converged", st.solution.report.converged}, {"feasible", k.feasibility <= c.solver.tol_feas}};
    if (!st.problem.nodes.empty()) checks["kkt"] = k.ok;
    rep["checks"] = checks;
    if (!a.dump_mesh.empty()) write_vtk(a.dump_mesh, st.blocks);
    return finish(a, rep, line("unfolded limit: m = %.12g\n", st.m));
}

int cmd_converge(const Args &a) {
    const ExperimentConfig c = load_config(a.config);
    const ConvergenceReport r = run_convergence(c);
    if (!a.out.empty()) emit(r, a.out);
    if (a.json) std::cout << report_json(r);
    else {
        std::printf("%-10s %10s %20s %14s %10s %8s\n", "eps", "dofs", "m_eps", "gap", "bound", "time[s]");
        for (const auto &e : r.runs)
            std::printf("%-10g %10d %20.12g %14.6g %10.6g %8.2f\n", e.eps, e.dofs, e.m_eps, e.gap, e.bound.ratio,
                        e.runtime);
        if (r.limit)
            std::printf("limit (%s): m = %.12g, %d dofs\n", r.limit->method.c_str(), r.limit->m, r.limit->dofs);
        for (const auto &e : r.runs)
            if (e.m_glued) std::printf("eps %g: glued %.12g, relative difference %.3g\n", e.eps, *e.m_glued, e.glued_rel);
        if (!r.error.empty()) std::printf("aborted: %s\n", r.error.c_str());
        for (const auto &ck : r.checks) std::printf("  check %s: %s\n", ck.first.c_str(), ck.second ? "pass" : "FAIL");
    }
    return r.pass() ? 0 : 1;
}

int cmd_korn(const Args &a) {
    const ExperimentConfig c = load_config(a.config);
    const KornConfig &k = c.korn;
    json probes = json::array();
    bool zero = true;
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    std::string summary;
    for (double eps : k.eps) {
        const HexMesh m = mesh_assembly(tile_layer(c.cell, c.omega, c.L, eps), k.n_cell, k.n_block, InclusionMode::Hole);
        KornOptions o;
        o.weighted = k.weighted;
        o.gamma = c.gamma;
        o.block = k.block;
        o.tol = k.tol;
        o.max_iter = k.max_iter;
        o.seed = c.seed;
        const KornResult cl = korn_probe(m, o);
        o.clamped = false;
        const KornResult un = korn_probe(m, o);
        zero = zero && std::abs(un.eigenvalue) <= c.checks.korn_zero;
        lo = std::min(lo, cl.constant), hi = std::max(hi, cl.constant);
        auto one = [](const KornResult &r) {
            json ritz = json::array();
            for (double v : r.ritz) ritz.push_back(v);
            return json{{"dofs", r.dofs},           {"eigenvalue", r.eigenvalue}, {"constant", num(r.constant)},
                        {"iterations", r.iterations}, {"ritz", ritz}};
        };
        probes.push_back({{"eps", eps}, {"clamped", one(cl)}, {"unclamped", one(un)}});
        summary += line("eps %g: clamped eigenvalue %.8g (C = %.6g)", eps, cl.eigenvalue, cl.constant) +
                   line(", unclamped %.3g\n", un.eigenvalue);
    }
    json rep;
    rep["form"] = k.weighted ? "weighted" : "plain";
    rep["n_cell"] = k.n_cell;
    rep["probes"] = probes;
    rep["constant_spread"] = hi > 0 ? num(hi / lo) : json(nullptr);
    json checks = {{"zero_mode", zero}};
    if (k.eps.size() >= 2) checks["clamped_stable"] = std::isfinite(hi) && hi <= c.checks.korn_factor * lo;
    rep["checks"] = checks;
    return finish(a, rep, summary);
}

int cmd_unfold_check(const Args &a) {
    const ExperimentConfig c = load_config(a.config);
    std::vector<double> eps = c.eps_sequence;
    if (eps.empty()) eps.push_back(c.single_eps());
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1, 1);
    json results = json::array();
    double worst = 0;
    std::string summary;
    for (double e : eps) {
        const HexMesh m = mesh_assembly(tile_layer(c.cell, c.omega, c.L, e), c.n_cell, c.n_block, c.mode);
        std::vector<std::pair<std::string, double>> mx;
        for (int s = 0; s < c.unfold_samples; ++s) {
            VectorXd u(m.num_dofs());
            for (auto &v : u) v = U(rng);
            const UnfoldReport r = unfold_check(m, u);
            if (mx.empty()) mx = r.residuals;
            for (size_t i = 0; i < mx.size(); ++i) mx[i].second = std::max(mx[i].second, r.residuals[i].second);
        }
        json res = json::object();
        double w = 0;
        for (const auto &p : mx) res[p.first] = p.second, w = std::max(w, p.second);
        worst = std::max(worst, w);
        results.push_back({{"eps", e}, {"dofs", m.num_dofs()}, {"max_residuals", res}, {"max", w}});
        summary += line("eps %g: max identity residual %.3g\n", e, w);
    }
    json rep;
    rep["n_cell"] = c.n_cell;
    rep["samples"] = c.unfold_samples;
    rep["results"] = results;
    rep["checks"] = {{"identities", worst <= c.checks.unfold_tol}};
    return finish(a, rep, summary);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Thin-layer homogenization with unilateral contact and friction"};
    app.require_subcommand(1, 1);
    Args a;
    std::vector<std::pair<CLI::App *, int (*)(const Args &)>> commands;
    auto add = [&](const char *name, const char *help, int (*fn)(const Args &)) {
        CLI::App *s = app.add_subcommand(name, help);
        s->add_option("--config", a.config, "JSON configuration")->required()->check(CLI::ExistingFile);
        s->add_option("--out", a.out, "report path (JSON)");
        s->add_flag("--json", a.json, "print the JSON report on stdout");
        s->add_option("--dump-mesh", a.dump_mesh, "write the mesh as legacy VTK");
        if (std::string(name) == "solve-eps" || std::string(name) == "solve-limit")
            s->add_option("--vtk", a.vtk, "write the final state as legacy VTK");
        commands.emplace_back(s, fn);
    };
    add("cell", "cell correctors and the effective interface matrix H", cmd_cell);
    add("solve-eps", "contact problem at one eps", cmd_solve_eps);
    add("solve-limit", "limit problem (transmission or unfolded with contact)", cmd_solve_limit);
    add("converge", "energy convergence study over eps_sequence", cmd_converge);
    add("korn", "Korn constant probes", cmd_korn);
    add("unfold-check", "unfolding identity residuals on random fields", cmd_unfold_check);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        for (const auto &[sub, fn] : commands)
            if (sub->parsed()) return fn(a);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
