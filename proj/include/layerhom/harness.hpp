#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "layerhom/eps_problem.hpp"
#include "layerhom/homogenize.hpp"

namespace layerhom {

struct KornConfig {
    std::vector<double> eps{0.5, 0.25};
    int n_cell = 4;
    int n_block = 4;
    bool weighted = true; // eps-weighted layer terms
    int block = 8;        // subspace size
    double tol = 1e-10;
    int max_iter = 500;
    bool in_converge = false; // also probe every eps of the convergence study
};

struct CheckConfig {
    bool monotone = true;        // |m_eps - m| strictly decreasing
    bool bound_trend = true;     // bound ratio within bound_factor across eps
    double bound_factor = 2;
    double glued_rel_tol = 1e-6; // stick vs glued
    double vi_tol = 1e-8;
    double unfold_tol = 1e-12;
    double korn_zero = 1e-12;
    double korn_factor = 2;
};

struct ExperimentConfig {
    CellGeometry cell;
    Rect2 omega;
    double L = 1;
    std::optional<double> eps; // single-eps commands; eps_sequence[0] otherwise
    InclusionMode mode = InclusionMode::Contact;
    MaterialSet materials;
    Loads loads;
    std::vector<CrackData> cracks; // index = crack id
    std::vector<std::string> gamma{"bottom"};
    std::vector<double> eps_sequence;

    int n_cell = 4;
    int n_block = 4;
    int cell_n = 8;       // cell-problem resolution for `cell`
    double limit_h = 0;   // 0: finest eps / n_cell
    int limit_n_cell = 0; // 0: n_cell
    std::string limit = "auto"; // auto | transmission | unfolded | none
    bool compare_glued = false;

    SolverOptions solver;
    std::uint64_t seed = 12345;
    int vi_samples = 200;
    int unfold_samples = 50;
    TestBC test_bc;
    KornConfig korn;
    CheckConfig checks;
    bool vtk = false;

    double single_eps() const;
    EpsSetup eps_setup(double eps, InclusionMode mode) const;
    BlockSetup block_setup() const;
    double limit_spacing() const;
};

ExperimentConfig parse_config(const std::string &json_text);
ExperimentConfig load_config(const std::string &path);

// Worker count for independent runs: LAYERHOM_THREADS caps the hardware count.
int thread_budget();

struct EpsRun {
    double eps = 0;
    int dofs = 0;
    int contact_nodes = 0;
    double m_eps = 0;
    int iterations = 0;
    bool converged = false;
    double feasibility = 0;
    BoundCheck bound;
    double gap = 0; // |m_eps - m|, when a limit was computed
    std::optional<double> m_glued;
    double glued_rel = 0;
    std::optional<double> korn_eigenvalue;
    double runtime = 0; // seconds; CSV only
};

struct LimitRun {
    std::string method; // transmission | unfolded
    double m = 0;
    int dofs = 0;
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    double spacing = 0;
    bool converged = false;
    double runtime = 0;
};

struct ConvergenceReport {
    std::vector<EpsRun> runs;
    std::optional<LimitRun> limit;
    bool monotone = false;
    double bound_spread = 0; // max/min bound ratio over eps
    std::vector<std::pair<std::string, bool>> checks;
    std::string error; // set when a sub-solve aborted the study
    bool pass() const;
};

ConvergenceReport run_convergence(const ExperimentConfig &c);

struct KornOptions {
    bool clamped = true;
    bool weighted = true;
    std::vector<std::string> gamma{"bottom"};
    int block = 8;
    double tol = 1e-10;
    int max_iter = 500;
    std::uint64_t seed = 12345;
};

struct KornResult {
    double eps = 1;
    int dofs = 0;
    double eigenvalue = 0; // smallest of (strain form, H1 form)
    double constant = 0;   // 1/sqrt(eigenvalue), inf for a zero mode
    std::vector<double> ritz;
    int iterations = 0;
    bool converged = false;
};

// Smallest Rayleigh quotient |e(v)|^2 / |v|^2_{H1} by shifted subspace inverse
// iteration. Layer elements get the eps weights when opt.weighted.
KornResult korn_probe(const HexMesh &mesh, const KornOptions &opt);

std::string report_json(const ConvergenceReport &r);
ConvergenceReport parse_report(const std::string &json_text);
std::string report_csv(const ConvergenceReport &r);
bool operator==(const ConvergenceReport &a, const ConvergenceReport &b);

// JSON to path, CSV next to it (extension replaced by .csv).
void emit(const ConvergenceReport &r, const std::string &path);
void write_text(const std::string &path, const std::string &text);

// Legacy ASCII unstructured grid; u (full dof vector) as point data when given.
void write_vtk(const std::string &path, const HexMesh &mesh, const VectorXd *u = nullptr);

} // namespace layerhom
