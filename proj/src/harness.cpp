#include "layerhom/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "json.hpp"

namespace layerhom {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string &where, const std::string &what) {
    throw Error("config: " + where + ": " + what);
}

// Rejects typos: every key of obj must be listed.
void known_keys(const json &obj, const std::string &where, std::initializer_list<const char *> keys) {
    if (!obj.is_object()) bad(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char *k : keys) ok = ok || it.key() == k;
        if (!ok) bad(where, "unknown key '" + it.key() + "'");
    }
}

double number(const json &j, const std::string &where) {
    if (!j.is_number()) bad(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(where, "not finite");
    return v;
}

int integer(const json &j, const std::string &where, int lo) {
    if (!j.is_number_integer()) bad(where, "expected an integer");
    const long long v = j.get<long long>();
    if (v < lo || v > std::numeric_limits<int>::max()) bad(where, "must be >= " + std::to_string(lo));
    return int(v);
}

bool boolean(const json &j, const std::string &where) {
    if (!j.is_boolean()) bad(where, "expected true or false");
    return j.get<bool>();
}

std::string string(const json &j, const std::string &where) {
    if (!j.is_string()) bad(where, "expected a string");
    return j.get<std::string>();
}

template <class F> void opt(const json &obj, const char *key, F &&f) {
    auto it = obj.find(key);
    if (it != obj.end()) f(*it);
}

std::array<double, 6> box(const json &j, const std::string &where) {
    if (!j.is_array() || j.size() != 6) bad(where, "expected [x0,y0,z0,x1,y1,z1]");
    std::array<double, 6> b{};
    for (int k = 0; k < 6; ++k) b[k] = number(j[k], where);
    return b;
}

Vec3 vec3(const json &j, const std::string &where) {
    if (!j.is_array() || j.size() != 3) bad(where, "expected 3 numbers");
    return Vec3(number(j[0], where), number(j[1], where), number(j[2], where));
}

Polynomial poly(const json &j, const std::string &where, const std::vector<std::string> &vars) {
    if (j.is_number()) return Polynomial::constant(int(vars.size()), number(j, where));
    if (j.is_string()) {
        try {
            return parse_polynomial(j.get<std::string>(), vars);
        } catch (const Error &e) {
            bad(where, e.what());
        }
    }
    bad(where, "expected a number or a polynomial string");
}

VectorPolynomial vpoly(const json &j, const std::string &where, const std::vector<std::string> &vars) {
    if (!j.is_array() || j.size() != 3) bad(where, "expected 3 components");
    VectorPolynomial v(int(vars.size()));
    for (int i = 0; i < 3; ++i) v[i] = poly(j[i], where + "[" + std::to_string(i) + "]", vars);
    return v;
}

const std::vector<std::string> X3{"x1", "x2", "x3"};
const std::vector<std::string> Y3{"y1", "y2", "y3"};
const std::vector<std::string> XY5{"x1", "x2", "y1", "y2", "y3"};

Material material(const json &j, const std::string &where) {
    known_keys(j, where, {"lambda", "mu"});
    Material m;
    opt(j, "lambda", [&](const json &v) { m.lambda = number(v, where + ".lambda"); });
    opt(j, "mu", [&](const json &v) { m.mu = number(v, where + ".mu"); });
    return m;
}

CrackData crack(const json &j, const std::string &where, CrackData d) {
    known_keys(j, where, {"id", "g", "G", "M"});
    opt(j, "g", [&](const json &v) { d.g = poly(v, where + ".g", Y3); });
    opt(j, "G", [&](const json &v) { d.G = poly(v, where + ".G", XY5); });
    opt(j, "M", [&](const json &v) { d.M = number(v, where + ".M"); });
    return d;
}

void check_tiling(const Rect2 &omega, double eps, const std::string &where) {
    if (!(eps > 0)) bad(where, "eps must be positive");
    if (!is_multiple(omega.wx, eps) || !is_multiple(omega.wy, eps))
        bad(where, "eps = " + std::to_string(eps) + " does not tile omega exactly");
}

} // namespace

ExperimentConfig parse_config(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(std::string("config: invalid JSON: ") + e.what());
    }
    known_keys(j, "top level",
               {"geometry", "inclusion_mode", "materials", "loads", "contact", "gamma", "eps_sequence", "mesh",
                "limit", "compare_glued", "solver", "seed", "vi_samples", "unfold_samples", "test_bc", "korn",
                "checks", "vtk"});
    ExperimentConfig c;

    if (!j.contains("geometry")) bad("geometry", "missing");
    const json &g = j["geometry"];
    known_keys(g, "geometry", {"inclusions", "open_cracks", "omega", "L", "eps"});
    CellSpec spec;
    opt(g, "inclusions", [&](const json &v) {
        if (!v.is_array()) bad("geometry.inclusions", "expected a list of boxes");
        for (const auto &b : v) spec.inclusions.push_back(Box::from_array(box(b, "geometry.inclusions")));
    });
    opt(g, "open_cracks", [&](const json &v) {
        if (!v.is_array()) bad("geometry.open_cracks", "expected a list of rectangles");
        for (const auto &b : v) spec.open_cracks.push_back(Box::from_array(box(b, "geometry.open_cracks")));
    });
    opt(g, "omega", [&](const json &v) {
        if (!v.is_array() || v.size() != 2) bad("geometry.omega", "expected [wx, wy]");
        c.omega = {number(v[0], "geometry.omega"), number(v[1], "geometry.omega")};
    });
    if (!(c.omega.wx > 0 && c.omega.wy > 0)) bad("geometry.omega", "sides must be positive");
    opt(g, "L", [&](const json &v) { c.L = number(v, "geometry.L"); });
    if (!(c.L > 0)) bad("geometry.L", "must be positive");
    opt(g, "eps", [&](const json &v) {
        c.eps = number(v, "geometry.eps");
        check_tiling(c.omega, *c.eps, "geometry.eps");
    });
    c.cell = build_unit_cell(spec);

    opt(j, "inclusion_mode", [&](const json &v) { c.mode = parse_inclusion_mode(string(v, "inclusion_mode")); });

    opt(j, "materials", [&](const json &v) {
        known_keys(v, "materials", {"a", "b", "matrix", "inclusion"});
        opt(v, "a", [&](const json &m) { c.materials.a = material(m, "materials.a"); });
        opt(v, "b", [&](const json &m) { c.materials.b = material(m, "materials.b"); });
        opt(v, "matrix", [&](const json &m) { c.materials.matrix = material(m, "materials.matrix"); });
        opt(v, "inclusion", [&](const json &m) { c.materials.inclusion = material(m, "materials.inclusion"); });
    });
    c.materials.validate();

    c.loads.f = VectorPolynomial::constant(3, Vec3::Zero());
    opt(j, "loads", [&](const json &v) {
        known_keys(v, "loads", {"f", "f_regions", "F"});
        opt(v, "f", [&](const json &f) { c.loads.f = vpoly(f, "loads.f", X3); });
        opt(v, "f_regions", [&](const json &r) {
            if (!r.is_array()) bad("loads.f_regions", "expected a list of region names");
            for (bool &b : c.loads.f_regions) b = false;
            for (const auto &name : r) {
                const std::string s = string(name, "loads.f_regions");
                if (s == "b") c.loads.f_regions[int(Region::BlockB)] = true;
                else if (s == "a") c.loads.f_regions[int(Region::BlockA)] = true;
                else if (s == "matrix") c.loads.f_regions[int(Region::Matrix)] = true;
                else bad("loads.f_regions", "unknown region '" + s + "' (b|a|matrix)");
            }
        });
        opt(v, "F", [&](const json &F) {
            if (!F.is_array()) bad("loads.F", "expected one vector per inclusion");
            if (int(F.size()) > c.cell.num_inclusions()) bad("loads.F", "more entries than inclusions");
            for (size_t k = 0; k < F.size(); ++k)
                c.loads.F.push_back(vpoly(F[k], "loads.F[" + std::to_string(k) + "]", XY5));
        });
    });

    const int ncr = c.cell.num_inclusions() + 1;
    c.cracks.assign(ncr, CrackData{});
    opt(j, "contact", [&](const json &v) {
        known_keys(v, "contact", {"default", "cracks"});
        CrackData d;
        opt(v, "default", [&](const json &x) { d = crack(x, "contact.default", d); });
        c.cracks.assign(ncr, d);
        opt(v, "cracks", [&](const json &list) {
            if (!list.is_array()) bad("contact.cracks", "expected a list");
            std::set<int> seen;
            for (const auto &x : list) {
                if (!x.contains("id")) bad("contact.cracks", "entry without id");
                const int id = integer(x["id"], "contact.cracks.id", 0);
                if (id >= ncr) bad("contact.cracks", "crack id " + std::to_string(id) + " out of range");
                if (!seen.insert(id).second) bad("contact.cracks", "duplicate crack id " + std::to_string(id));
                c.cracks[id] = crack(x, "contact.cracks[" + std::to_string(id) + "]", d);
            }
        });
    });

    opt(j, "gamma", [&](const json &v) {
        if (!v.is_array() || v.empty()) bad("gamma", "expected a nonempty list of faces");
        c.gamma.clear();
        for (const auto &f : v) c.gamma.push_back(string(f, "gamma"));
    });

    opt(j, "eps_sequence", [&](const json &v) {
        if (!v.is_array()) bad("eps_sequence", "expected a list");
        for (const auto &e : v) {
            const double x = number(e, "eps_sequence");
            check_tiling(c.omega, x, "eps_sequence");
            if (!c.eps_sequence.empty() && !(x < c.eps_sequence.back()))
                bad("eps_sequence", "must be strictly decreasing");
            c.eps_sequence.push_back(x);
        }
    });

    opt(j, "mesh", [&](const json &v) {
        known_keys(v, "mesh", {"n_cell", "n_block", "cell_n", "limit_h", "limit_n_cell"});
        opt(v, "n_cell", [&](const json &x) { c.n_cell = integer(x, "mesh.n_cell", 1); });
        opt(v, "n_block", [&](const json &x) { c.n_block = integer(x, "mesh.n_block", 1); });
        opt(v, "cell_n", [&](const json &x) { c.cell_n = integer(x, "mesh.cell_n", 1); });
        opt(v, "limit_h", [&](const json &x) {
            c.limit_h = number(x, "mesh.limit_h");
            if (!(c.limit_h > 0)) bad("mesh.limit_h", "must be positive");
        });
        opt(v, "limit_n_cell", [&](const json &x) { c.limit_n_cell = integer(x, "mesh.limit_n_cell", 1); });
    });

    opt(j, "limit", [&](const json &v) {
        c.limit = string(v, "limit");
        if (c.limit != "auto" && c.limit != "transmission" && c.limit != "unfolded" && c.limit != "none")
            bad("limit", "expected auto|transmission|unfolded|none");
    });
    opt(j, "compare_glued", [&](const json &v) { c.compare_glued = boolean(v, "compare_glued"); });

    opt(j, "solver", [&](const json &v) {
        known_keys(v, "solver",
                   {"tol_energy", "tol_feas", "tol_dual", "max_iter", "check_every", "rho_factor", "relaxation", "linear"});
        SolverOptions &s = c.solver;
        opt(v, "tol_energy", [&](const json &x) { s.tol_energy = number(x, "solver.tol_energy"); });
        opt(v, "tol_feas", [&](const json &x) { s.tol_feas = number(x, "solver.tol_feas"); });
        opt(v, "tol_dual", [&](const json &x) { s.tol_dual = number(x, "solver.tol_dual"); });
        opt(v, "max_iter", [&](const json &x) { s.max_iter = integer(x, "solver.max_iter", 1); });
        opt(v, "check_every", [&](const json &x) { s.check_every = integer(x, "solver.check_every", 1); });
        opt(v, "rho_factor", [&](const json &x) { s.rho_factor = number(x, "solver.rho_factor"); });
        opt(v, "relaxation", [&](const json &x) { s.relaxation = number(x, "solver.relaxation"); });
        opt(v, "linear", [&](const json &x) { s.linear = parse_linear_solver(string(x, "solver.linear")); });
        if (!(s.rho_factor > 0)) bad("solver.rho_factor", "must be positive");
        if (!(s.relaxation > 0 && s.relaxation < 2)) bad("solver.relaxation", "must lie in (0, 2)");
    });

    opt(j, "seed", [&](const json &v) {
        if (!v.is_number_unsigned()) bad("seed", "expected a nonnegative integer");
        c.seed = v.get<std::uint64_t>();
    });
    opt(j, "vi_samples", [&](const json &v) { c.vi_samples = integer(v, "vi_samples", 0); });
    opt(j, "unfold_samples", [&](const json &v) { c.unfold_samples = integer(v, "unfold_samples", 1); });

    opt(j, "test_bc", [&](const json &v) {
        known_keys(v, "test_bc", {"lateral_fixed", "top_traction"});
        c.test_bc.enabled = true;
        opt(v, "lateral_fixed", [&](const json &lf) {
            known_keys(lf, "test_bc.lateral_fixed", {"x0", "x1", "y0", "y1"});
            const char *names[4] = {"x0", "x1", "y0", "y1"};
            for (int f = 0; f < 4; ++f)
                opt(lf, names[f], [&](const json &comps) {
                    if (!comps.is_array()) bad("test_bc.lateral_fixed", "expected component lists");
                    for (const auto &k : comps) {
                        const int comp = integer(k, "test_bc.lateral_fixed", 0);
                        if (comp > 2) bad("test_bc.lateral_fixed", "component must be 0, 1 or 2");
                        c.test_bc.lateral_fixed[f].push_back(comp);
                    }
                });
        });
        opt(v, "top_traction", [&](const json &t) { c.test_bc.top_traction = vec3(t, "test_bc.top_traction"); });
    });

    opt(j, "korn", [&](const json &v) {
        known_keys(v, "korn", {"eps", "n_cell", "n_block", "form", "block", "tol", "max_iter", "in_converge"});
        KornConfig &k = c.korn;
        opt(v, "eps", [&](const json &e) {
            if (!e.is_array()) bad("korn.eps", "expected a list");
            k.eps.clear();
            for (const auto &x : e) {
                k.eps.push_back(number(x, "korn.eps"));
                check_tiling(c.omega, k.eps.back(), "korn.eps");
            }
        });
        opt(v, "n_cell", [&](const json &x) { k.n_cell = integer(x, "korn.n_cell", 1); });
        opt(v, "n_block", [&](const json &x) { k.n_block = integer(x, "korn.n_block", 1); });
        opt(v, "form", [&](const json &x) {
            const std::string f = string(x, "korn.form");
            if (f != "weighted" && f != "plain") bad("korn.form", "expected weighted|plain");
            k.weighted = f == "weighted";
        });
        opt(v, "block", [&](const json &x) { k.block = integer(x, "korn.block", 1); });
        opt(v, "tol", [&](const json &x) { k.tol = number(x, "korn.tol"); });
        opt(v, "max_iter", [&](const json &x) { k.max_iter = integer(x, "korn.max_iter", 1); });
        opt(v, "in_converge", [&](const json &x) { k.in_converge = boolean(x, "korn.in_converge"); });
    });

    opt(j, "checks", [&](const json &v) {
        known_keys(v, "checks",
                   {"monotone", "bound_trend", "bound_factor", "glued_rel_tol", "vi_tol", "unfold_tol", "korn_zero",
                    "korn_factor"});
        CheckConfig &k = c.checks;
        opt(v, "monotone", [&](const json &x) { k.monotone = boolean(x, "checks.monotone"); });
        opt(v, "bound_trend", [&](const json &x) { k.bound_trend = boolean(x, "checks.bound_trend"); });
        opt(v, "bound_factor", [&](const json &x) { k.bound_factor = number(x, "checks.bound_factor"); });
        opt(v, "glued_rel_tol", [&](const json &x) { k.glued_rel_tol = number(x, "checks.glued_rel_tol"); });
        opt(v, "vi_tol", [&](const json &x) { k.vi_tol = number(x, "checks.vi_tol"); });
        opt(v, "unfold_tol", [&](const json &x) { k.unfold_tol = number(x, "checks.unfold_tol"); });
        opt(v, "korn_zero", [&](const json &x) { k.korn_zero = number(x, "checks.korn_zero"); });
        opt(v, "korn_factor", [&](const json &x) { k.korn_factor = number(x, "checks.korn_factor"); });
    });
    opt(j, "vtk", [&](const json &v) { c.vtk = boolean(v, "vtk"); });

    if (c.compare_glued && c.mode != InclusionMode::Contact)
        bad("compare_glued", "needs inclusion_mode = contact");
    return c;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

double ExperimentConfig::single_eps() const {
    if (eps) return *eps;
    if (!eps_sequence.empty()) return eps_sequence.front();
    throw Error("config: neither geometry.eps nor eps_sequence given");
}

EpsSetup ExperimentConfig::eps_setup(double e, InclusionMode m) const {
    EpsSetup s;
    s.cell = cell;
    s.omega = omega;
    s.L = L;
    s.eps = e;
    s.n_cell = n_cell;
    s.n_block = n_block;
    s.mode = m;
    s.materials = materials;
    s.loads = loads;
    s.cracks = cracks;
    s.gamma = gamma;
    return s;
}

double ExperimentConfig::limit_spacing() const {
    if (limit_h > 0) return limit_h;
    const double e = eps_sequence.empty() ? single_eps() : eps_sequence.back();
    return e / n_cell;
}

BlockSetup ExperimentConfig::block_setup() const {
    BlockSetup b;
    b.omega = omega;
    b.L = L;
    b.h = limit_spacing();
    b.n_block = n_block;
    b.materials = materials;
    b.loads = loads;
    b.gamma = gamma;
    b.test_bc = test_bc;
    return b;
}

int thread_budget() {
    int n = std::max(1, int(std::thread::hardware_concurrency()));
    if (const char *env = std::getenv("LAYERHOM_THREADS"); env && *env) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw Error("LAYERHOM_THREADS must be a positive integer");
        n = std::min<long>(n, v);
    }
    return n;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs f(0..n-1) on at most `threads` workers. Results land by index, so the
// outcome does not depend on scheduling.
template <class F> std::vector<std::string> parallel_for(int n, int threads, F &&f) {
    std::vector<std::string> errors(n);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i; (i = next++) < n;) {
            try {
                f(i);
            } catch (const std::exception &e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown failure";
            }
        }
    };
    const int nt = std::max(1, std::min(threads, n));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(work);
    work();
    for (auto &t : pool) t.join();
    return errors;
}

KornResult probe_layer(const ExperimentConfig &c, double eps, int n_cell, int n_block, bool weighted) {
    LayeredDomain d = tile_layer(c.cell, c.omega, c.L, eps);
    HexMesh m = mesh_assembly(d, n_cell, n_block, InclusionMode::Hole);
    KornOptions o;
    o.weighted = weighted;
    o.gamma = c.gamma;
    o.block = c.korn.block;
    o.tol = c.korn.tol;
    o.max_iter = c.korn.max_iter;
    o.seed = c.seed;
    KornResult r = korn_probe(m, o);
    r.eps = eps;
    return r;
}

EpsRun run_eps(const ExperimentConfig &c, double eps) {
    const auto t0 = std::chrono::steady_clock::now();
    EpsRun r;
    r.eps = eps;
    EpsSystem sys = build_eps_system(c.eps_setup(eps, c.mode));
    ContactSolution sol = minimize(sys.problem, c.solver);
    r.dofs = sys.mesh.num_dofs();
    r.contact_nodes = int(sys.problem.nodes.size());
    r.m_eps = sol.report.m;
    r.iterations = sol.report.iterations;
    r.converged = sol.report.converged;
    r.feasibility = sol.report.feasibility;
    r.bound = bound_check(sys, sol.u);
    if (c.compare_glued) {
        EpsSystem gl = build_eps_system(c.eps_setup(eps, InclusionMode::Glued));
        const double mg = minimize(gl.problem, c.solver).report.m;
        r.m_glued = mg;
        const double scale = std::max(std::abs(mg), std::abs(r.m_eps));
        r.glued_rel = scale > 0 ? std::abs(r.m_eps - mg) / scale : 0.0;
    }
    if (c.korn.in_converge) r.korn_eigenvalue = probe_layer(c, eps, c.n_cell, c.n_block, c.korn.weighted).eigenvalue;
    r.runtime = seconds_since(t0);
    return r;
}

std::shared_ptr<const HexMesh> corrector_cell(const ExperimentConfig &c, int n) {
    const InclusionMode m = c.mode == InclusionMode::Glued ? InclusionMode::Glued : InclusionMode::Hole;
    return std::make_shared<const HexMesh>(mesh_cell(c.cell, n, m));
}

LimitRun run_limit(const ExperimentConfig &c, const std::string &method) {
    const auto t0 = std::chrono::steady_clock::now();
    LimitRun r;
    r.method = method;
    r.spacing = c.limit_spacing();
    const int n = c.limit_n_cell > 0 ? c.limit_n_cell : c.n_cell;
    if (method == "transmission") {
        if (c.mode == InclusionMode::Contact && c.cell.num_inclusions() + (c.cell.has_open_cracks() ? 1 : 0) > 0)
            throw Error("transmission limit needs inclusion_mode hole or glued and no open cracks");
        CorrectorSet cs = solve_correctors(corrector_cell(c, n), c.materials, c.solver.linear);
        r.H = cs.H;
        TransmissionResult t = solve_transmission(c.block_setup(), cs.H, c.solver.linear);
        r.m = t.m;
        r.dofs = t.mesh.num_dofs();
        r.converged = t.residual <= 1e-10;
    } else {
        LimitSetup s;
        s.blocks = c.block_setup();
        s.cell = c.cell;
        s.n_cell = n;
        s.mode = c.mode;
        s.cracks = c.cracks;
        LimitState st = solve_unfolded_limit(s, c.solver);
        r.m = st.m;
        r.dofs = int(st.problem.K.rows());
        r.converged = st.solution.report.converged;
    }
    r.runtime = seconds_since(t0);
    return r;
}

} // namespace

bool ConvergenceReport::pass() const {
    if (!error.empty()) return false;
    for (const auto &c : checks)
        if (!c.second) return false;
    return true;
}

ConvergenceReport run_convergence(const ExperimentConfig &c) {
    ConvergenceReport rep;
    std::string method = c.limit;
    if (method == "auto") method = c.mode == InclusionMode::Contact ? "unfolded" : "transmission";

    // eps runs and the limit are independent jobs; job n is the limit
    const int n = int(c.eps_sequence.size());
    const bool want_limit = method != "none";
    std::vector<EpsRun> runs(n);
    LimitRun limit;
    auto errors = parallel_for(n + (want_limit ? 1 : 0), thread_budget(), [&](int i) {
        if (i < n) runs[i] = run_eps(c, c.eps_sequence[i]);
        else limit = run_limit(c, method);
    });

    for (int i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
            std::ostringstream os;
            os << "eps = " << c.eps_sequence[i] << ": " << errors[i];
            rep.error = os.str();
            break;
        }
        rep.runs.push_back(runs[i]);
    }
    if (want_limit) {
        if (errors[n].empty()) rep.limit = limit;
        else if (rep.error.empty()) rep.error = "limit: " + errors[n];
    }

    bool converged = !rep.limit || rep.limit->converged || !want_limit;
    for (const auto &r : rep.runs) converged = converged && r.converged;
    rep.checks.emplace_back("converged", converged);

    if (rep.limit) {
        for (auto &r : rep.runs) r.gap = std::abs(r.m_eps - rep.limit->m);
        rep.monotone = rep.runs.size() >= 2;
        for (size_t i = 1; i < rep.runs.size(); ++i) rep.monotone = rep.monotone && rep.runs[i].gap < rep.runs[i - 1].gap;
        if (c.checks.monotone) rep.checks.emplace_back("monotone_gaps", rep.monotone);
    }

    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto &r : rep.runs)
        if (r.bound.ratio > 0) lo = std::min(lo, r.bound.ratio), hi = std::max(hi, r.bound.ratio);
    rep.bound_spread = hi > 0 ? hi / lo : 1.0;
    if (c.checks.bound_trend && rep.runs.size() >= 2)
        rep.checks.emplace_back("bound_trend", rep.bound_spread < c.checks.bound_factor);

    if (c.compare_glued) {
        bool ok = true;
        for (const auto &r : rep.runs) ok = ok && r.glued_rel <= c.checks.glued_rel_tol;
        rep.checks.emplace_back("stick_matches_glued", ok);
    }
    if (c.korn.in_converge && rep.runs.size() >= 2) {
        double klo = std::numeric_limits<double>::infinity(), khi = 0;
        for (const auto &r : rep.runs) {
            const double k = *r.korn_eigenvalue > 0 ? 1 / std::sqrt(*r.korn_eigenvalue) : INFINITY;
            klo = std::min(klo, k), khi = std::max(khi, k);
        }
        rep.checks.emplace_back("korn_stable", std::isfinite(khi) && khi <= c.checks.korn_factor * klo);
    }
    if (!rep.error.empty()) rep.checks.emplace_back("completed", false);
    return rep;
}

// ---- Korn probe

KornResult korn_probe(const HexMesh &mesh, const KornOptions &o) {
    const double eps = mesh.eps;
    RegionWeights ws, wm;
    if (o.weighted) {
        ws.matrix = ws.inclusion = eps;
        wm.matrix = wm.inclusion = 1 / eps;
    }
    const SpMat S = assemble_strain_form(mesh, ws);
    const SpMat D = SpMat(assemble_gradient_form(mesh, ws) + assemble_mass(mesh, wm));

    DofMap dm(mesh.num_dofs());
    std::vector<char> used(mesh.num_nodes(), 0);
    for (const auto &el : mesh.elements)
        for (int v : el.nodes) used[v] = 1;
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (!used[i])
            for (int k = 0; k < 3; ++k) dm.fix(3 * i + k);
    if (o.clamped)
        for (int i : gamma_nodes(mesh, o.gamma))
            for (int k = 0; k < 3; ++k) dm.fix(3 * i + k);
    dm.finalize();
    const SpMat Sr = dm.reduce(S), Dr = dm.reduce(D);
    const int n = int(Sr.rows());
    if (n == 0) throw Error("Korn probe: no free dofs");
    const int p = std::min(o.block, n);

    // small shift keeps the unclamped operator invertible; the reported value
    // is the Rayleigh quotient itself
    const double shift = 1e-6 * Sr.diagonal().sum() / Dr.diagonal().sum();
    const SpdSolver A(SpMat(Sr + shift * Dr));

    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> U(-1, 1);
    Eigen::MatrixXd X(n, p);
    for (int jc = 0; jc < p; ++jc)
        for (int i = 0; i < n; ++i) X(i, jc) = U(rng);

    KornResult r;
    r.eps = eps;
    r.dofs = n;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= o.max_iter; ++it) {
        Eigen::MatrixXd Y(n, p);
        const Eigen::MatrixXd DX = Dr * X;
        for (int jc = 0; jc < p; ++jc) Y.col(jc) = A.solve(DX.col(jc));
        const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Y).householderQ() * Eigen::MatrixXd::Identity(n, p);
        const Eigen::MatrixXd Ss = Q.transpose() * (Sr * Q), Ds = Q.transpose() * (Dr * Q);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (Ss + Ss.transpose()),
                                                                       0.5 * (Ds + Ds.transpose()));
        if (ges.info() != Eigen::Success) throw Error("Korn probe: eigensolver stagnation (Ritz step failed)");
        X = Q * ges.eigenvectors();
        const Eigen::VectorXd lam = ges.eigenvalues();
        r.eigenvalue = lam[0];
        r.iterations = it;
        if (it > 1 && std::abs(lam[0] - prev) <= o.tol * std::abs(lam[0]) + 1e-14 * std::abs(lam[p - 1])) {
            r.converged = true;
            r.ritz.assign(lam.data(), lam.data() + p);
            break;
        }
        prev = lam[0];
    }
    if (!r.converged) throw Error("Korn probe: eigensolver stagnation");
    r.constant = r.eigenvalue > 0 ? 1 / std::sqrt(r.eigenvalue) : std::numeric_limits<double>::infinity();
    return r;
}

// ---- reports

namespace {

json bound_json(const BoundCheck &b) {
    return json{{"M", b.M_value}, {"data", b.data}, {"ratio", b.ratio}, {"cond", b.cond}};
}

BoundCheck bound_from(const json &j) {
    BoundCheck b;
    b.M_value = j.at("M").get<double>();
    b.data = j.at("data").get<double>();
    b.ratio = j.at("ratio").get<double>();
    b.cond = j.at("cond").get<double>();
    return b;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string report_json(const ConvergenceReport &r) {
    json runs = json::array();
    for (const auto &e : r.runs) {
        json x{{"eps", e.eps},
               {"dofs", e.dofs},
               {"contact_nodes", e.contact_nodes},
               {"m_eps", e.m_eps},
               {"gap", r.limit ? json(e.gap) : json(nullptr)},
               {"iterations", e.iterations},
               {"converged", e.converged},
               {"feasibility", e.feasibility},
               {"bound", bound_json(e.bound)}};
        if (e.m_glued) x["m_glued"] = *e.m_glued, x["glued_rel"] = e.glued_rel;
        if (e.korn_eigenvalue) x["korn_eigenvalue"] = *e.korn_eigenvalue;
        runs.push_back(x);
    }
    json out;
    out["runs"] = runs;
    if (r.limit) {
        const LimitRun &l = *r.limit;
        json x{{"method", l.method}, {"m", l.m}, {"dofs", l.dofs}, {"spacing", l.spacing}, {"converged", l.converged}};
        if (l.method == "transmission") {
            json H = json::array();
            for (int i = 0; i < 3; ++i) H.push_back({l.H(i, 0), l.H(i, 1), l.H(i, 2)});
            x["H"] = H;
        }
        out["limit"] = x;
    } else {
        out["limit"] = nullptr;
    }
    out["monotone"] = r.monotone;
    out["bound_spread"] = r.bound_spread;
    json checks = json::object();
    for (const auto &c : r.checks) checks[c.first] = c.second;
    out["checks"] = checks;
    out["error"] = r.error;
    out["pass"] = r.pass();
    return out.dump(2) + "\n";
}

ConvergenceReport parse_report(const std::string &text) {
    ConvergenceReport r;
    try {
        const json j = json::parse(text);
        for (const auto &x : j.at("runs")) {
            EpsRun e;
            e.eps = x.at("eps").get<double>();
            e.dofs = x.at("dofs").get<int>();
            e.contact_nodes = x.at("contact_nodes").get<int>();
            e.m_eps = x.at("m_eps").get<double>();
            if (!x.at("gap").is_null()) e.gap = x["gap"].get<double>();
            e.iterations = x.at("iterations").get<int>();
            e.converged = x.at("converged").get<bool>();
            e.feasibility = x.at("feasibility").get<double>();
            e.bound = bound_from(x.at("bound"));
            if (x.contains("m_glued")) e.m_glued = x["m_glued"].get<double>(), e.glued_rel = x.at("glued_rel").get<double>();
            if (x.contains("korn_eigenvalue")) e.korn_eigenvalue = x["korn_eigenvalue"].get<double>();
            r.runs.push_back(e);
        }
        if (!j.at("limit").is_null()) {
            const json &x = j["limit"];
            LimitRun l;
            l.method = x.at("method").get<std::string>();
            l.m = x.at("m").get<double>();
            l.dofs = x.at("dofs").get<int>();
            l.spacing = x.at("spacing").get<double>();
            l.converged = x.at("converged").get<bool>();
            if (x.contains("H"))
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) l.H(a, b) = x["H"][a][b].get<double>();
            r.limit = l;
        }
        r.monotone = j.at("monotone").get<bool>();
        r.bound_spread = j.at("bound_spread").get<double>();
        for (auto it = j.at("checks").begin(); it != j["checks"].end(); ++it)
            r.checks.emplace_back(it.key(), it.value().get<bool>());
        r.error = j.at("error").get<std::string>();
    } catch (const json::exception &e) {
        throw Error(std::string("report: ") + e.what());
    }
    return r;
}

std::string report_csv(const ConvergenceReport &r) {
    std::string s = "eps,dofs,m_eps,gap,iterations,converged,bound_ratio,m_glued,glued_rel,korn_eigenvalue,runtime_s\n";
    for (const auto &e : r.runs) {
        s += fmt(e.eps) + "," + std::to_string(e.dofs) + "," + fmt(e.m_eps) + "," + (r.limit ? fmt(e.gap) : "") + "," +
             std::to_string(e.iterations) + "," + (e.converged ? "1" : "0") + "," + fmt(e.bound.ratio) + "," +
             (e.m_glued ? fmt(*e.m_glued) : "") + "," + (e.m_glued ? fmt(e.glued_rel) : "") + "," +
             (e.korn_eigenvalue ? fmt(*e.korn_eigenvalue) : "") + "," + fmt(e.runtime) + "\n";
    }
    return s;
}

// runtimes are not part of the report identity
bool operator==(const ConvergenceReport &a, const ConvergenceReport &b) {
    auto same_run = [](const EpsRun &x, const EpsRun &y) {
        return x.eps == y.eps && x.dofs == y.dofs && x.contact_nodes == y.contact_nodes && x.m_eps == y.m_eps &&
               x.gap == y.gap && x.iterations == y.iterations && x.converged == y.converged &&
               x.feasibility == y.feasibility && x.bound.M_value == y.bound.M_value && x.bound.data == y.bound.data &&
               x.bound.ratio == y.bound.ratio && x.bound.cond == y.bound.cond && x.m_glued == y.m_glued &&
               x.glued_rel == y.glued_rel && x.korn_eigenvalue == y.korn_eigenvalue;
    };
    if (a.runs.size() != b.runs.size()) return false;
    for (size_t i = 0; i < a.runs.size(); ++i)
        if (!same_run(a.runs[i], b.runs[i])) return false;
    if (a.limit.has_value() != b.limit.has_value()) return false;
    if (a.limit) {
        const LimitRun &x = *a.limit, &y = *b.limit;
        if (x.method != y.method || x.m != y.m || x.dofs != y.dofs || x.spacing != y.spacing ||
            x.converged != y.converged || x.H != y.H)
            return false;
    }
    return a.monotone == b.monotone && a.bound_spread == b.bound_spread && a.checks == b.checks && a.error == b.error;
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("cannot write '" + path + "'");
}

void emit(const ConvergenceReport &r, const std::string &path) {
    write_text(path, report_json(r));
    std::string csv = path;
    const size_t slash = csv.find_last_of('/'), dot = csv.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) csv.erase(dot);
    write_text(csv + ".csv", report_csv(r));
}

void write_vtk(const std::string &path, const HexMesh &mesh, const VectorXd *u) {
    if (u && u->size() != mesh.num_dofs()) throw Error("vtk: field size does not match the mesh");
    std::ostringstream os;
    os << "# vtk DataFile Version 3.0\nlayerhom\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto &x : mesh.nodes) os << fmt(x[0]) << ' ' << fmt(x[1]) << ' ' << fmt(x[2]) << '\n';
    const size_t ne = mesh.elements.size();
    os << "CELLS " << ne << ' ' << 9 * ne << '\n';
    // corner bits (x + 2y + 4z) to VTK hexahedron order
    static const int order[8] = {0, 1, 3, 2, 4, 5, 7, 6};
    for (const auto &el : mesh.elements) {
        os << 8;
        for (int k : order) os << ' ' << el.nodes[k];
        os << '\n';
    }
    os << "CELL_TYPES " << ne << '\n';
    for (size_t e = 0; e < ne; ++e) os << "12\n";
    os << "CELL_DATA " << ne << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
    for (const auto &el : mesh.elements) os << int(el.region) << '\n';
    os << "SCALARS cell int 1\nLOOKUP_TABLE default\n";
    for (const auto &el : mesh.elements) os << el.cell << '\n';
    if (u) {
        os << "POINT_DATA " << mesh.num_nodes() << "\nVECTORS displacement double\n";
        for (int i = 0; i < mesh.num_nodes(); ++i)
            os << fmt((*u)[3 * i]) << ' ' << fmt((*u)[3 * i + 1]) << ' ' << fmt((*u)[3 * i + 2]) << '\n';
    }
    write_text(path, os.str());
}

} // namespace layerhom
