#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "layerhom/harness.hpp"

using namespace layerhom;

namespace {

const char *kSmall = R"({
  "geometry": {"inclusions": [[0.25, 0.25, 0.25, 0.75, 0.75, 0.75]], "omega": [1, 1], "L": 1},
  "inclusion_mode": "hole",
  "loads": {"f": [0, 0, 0]},
  "eps_sequence": [0.5],
  "mesh": {"n_cell": 4, "n_block": 2},
  "limit": "transmission"
})";

nlohmann::json small() { return nlohmann::json::parse(kSmall); }

std::string read(const std::string &path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("polynomial parser") {
    const Polynomial p = parse_polynomial("0.5 - 2*x1^2*x3 + x2", {"x1", "x2", "x3"});
    const double x[3] = {1.5, -2, 0.25};
    CHECK(p(x) == doctest::Approx(0.5 - 2 * 1.5 * 1.5 * 0.25 - 2).epsilon(1e-15));
    CHECK(parse_polynomial("-y3", {"y1", "y2", "y3"})(x) == -0.25);
    CHECK(parse_polynomial("3", {"y1"}).is_constant());
    CHECK_THROWS_AS(parse_polynomial("x4", {"x1", "x2", "x3"}), Error);
    CHECK_THROWS_AS(parse_polynomial("x1 +", {"x1"}), Error);
    CHECK_THROWS_AS(parse_polynomial("x1^-1", {"x1"}), Error);
}

TEST_CASE("config parsing and validation") {
    const ExperimentConfig c = parse_config(kSmall);
    CHECK(c.mode == InclusionMode::Hole);
    CHECK(c.eps_sequence == std::vector<double>{0.5});
    CHECK(c.single_eps() == 0.5);
    CHECK(c.limit_spacing() == 0.125);
    CHECK(c.cell.num_inclusions() == 1);

    auto rejects = [](nlohmann::json j, const std::string &needle) {
        try {
            parse_config(j.dump());
        } catch (const Error &e) {
            return std::string(e.what()).find(needle) != std::string::npos;
        }
        return false;
    };
    auto j = small();
    j["eps_sequence"] = {0.25, 0.5};
    CHECK(rejects(j, "strictly decreasing"));
    j = small();
    j["eps_sequence"] = {0.3};
    CHECK(rejects(j, "tile"));
    j = small();
    j["mesh"]["n_cels"] = 2;
    CHECK(rejects(j, "unknown key 'n_cels'"));
    j = small();
    j["compare_glued"] = true;
    CHECK(rejects(j, "compare_glued"));
    j = small();
    j["limit"] = "exact";
    CHECK(rejects(j, "limit"));
    CHECK_THROWS_AS(parse_config("{"), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);

    j = small();
    j["loads"]["f"] = {"x1*x3", 0, -1};
    const ExperimentConfig p = parse_config(j.dump());
    const double x[3] = {0.5, 0.2, -0.5};
    CHECK(p.loads.f(x)[0] == -0.25);
}

TEST_CASE("thread budget") {
    setenv("LAYERHOM_THREADS", "1", 1);
    CHECK(thread_budget() == 1);
    setenv("LAYERHOM_THREADS", "0", 1);
    CHECK_THROWS_AS(thread_budget(), Error);
    setenv("LAYERHOM_THREADS", "two", 1);
    CHECK_THROWS_AS(thread_budget(), Error);
    unsetenv("LAYERHOM_THREADS");
    CHECK(thread_budget() >= 1);
}

TEST_CASE("zero loads give zero energies; reports round-trip") {
    auto j = small();
    j["eps_sequence"] = {0.5, 0.25};
    const ConvergenceReport r = run_convergence(parse_config(j.dump()));
    INFO(r.error);
    REQUIRE(r.error.empty());
    REQUIRE(r.runs.size() == 2);
    REQUIRE(r.limit);
    CHECK(r.limit->m == 0.0);
    for (const auto &run : r.runs) {
        CHECK(run.m_eps == 0.0);
        CHECK(run.gap == 0.0);
    }
    CHECK(parse_report(report_json(r)) == r);

    // one CSV row per eps after the header
    const std::string csv = report_csv(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    const ConvergenceReport empty;
    const auto parsed = nlohmann::json::parse(report_json(empty));
    CHECK(parsed["runs"].empty());
    CHECK(parse_report(report_json(empty)) == empty);
}

TEST_CASE("emit writes JSON and a CSV sibling; VTK output") {
    const auto dir = std::filesystem::temp_directory_path() / "layerhom_test_harness";
    std::filesystem::create_directories(dir);
    ConvergenceReport r;
    r.runs.push_back(EpsRun{});
    r.runs[0].eps = 0.5;
    emit(r, (dir / "out.json").string());
    CHECK(parse_report(read((dir / "out.json").string())) == r);
    CHECK(std::filesystem::exists(dir / "out.csv"));

    const HexMesh m = mesh_cell(build_unit_cell({}), 2);
    VectorXd u = VectorXd::LinSpaced(m.num_dofs(), 0, 1);
    write_vtk((dir / "cell.vtk").string(), m, &u);
    const std::string vtk = read((dir / "cell.vtk").string());
    CHECK(vtk.find("POINTS " + std::to_string(m.num_nodes())) != std::string::npos);
    CHECK(vtk.find("CELLS " + std::to_string(m.elements.size())) != std::string::npos);
    CHECK(vtk.find("displacement") != std::string::npos);
    VectorXd wrong(3);
    CHECK_THROWS_AS(write_vtk((dir / "bad.vtk").string(), m, &wrong), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("Korn probe: rigid zero mode without Gamma, positive constant with it") {
    CellSpec s;
    s.inclusions.push_back(Box::from_array({0.25, 0.25, 0.25, 0.75, 0.75, 0.75}));
    const HexMesh m = mesh_assembly(tile_layer(build_unit_cell(s), {1, 1}, 1, 0.5), 4, 2, InclusionMode::Hole);
    KornOptions o;
    const KornResult clamped = korn_probe(m, o);
    CHECK(clamped.converged);
    CHECK(clamped.eigenvalue > 1e-4);
    CHECK(clamped.constant == doctest::Approx(1 / std::sqrt(clamped.eigenvalue)));
    o.clamped = false;
    const KornResult free = korn_probe(m, o);
    CHECK(std::abs(free.eigenvalue) <= 1e-12);
    o.clamped = true;
    o.weighted = false;
    CHECK(korn_probe(m, o).eigenvalue > 0);
}
