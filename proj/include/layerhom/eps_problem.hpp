#pragma once

#include <string>
#include <vector>

#include "layerhom/assembly.hpp"
#include "layerhom/contact.hpp"

namespace layerhom {

// Problem P_eps on a layered mesh.
struct EpsSetup {
    CellGeometry cell;
    Rect2 omega;
    double L = 1;
    double eps = 0.5;
    int n_cell = 4;
    int n_block = 4;
    InclusionMode mode = InclusionMode::Contact;
    MaterialSet materials;
    Loads loads;
    std::vector<CrackData> cracks; // index = crack id
    std::vector<std::string> gamma{"bottom"};
};

struct EpsSystem {
    LayeredDomain domain;
    HexMesh mesh;
    MaterialSet materials;
    std::vector<NodalContact> contact;
    ContactProblem problem;
    std::vector<double> M_lower; // per crack id
    double F_sup = 0;            // max_j sup |F^j| = eps max_j sup |f^j_eps|
    double f_L2 = 0;             // ||f||_{L2}
    std::vector<double> g_L1;    // per crack id
};

EpsSystem build_eps_system(const EpsSetup &s);
EnergyBreakdown eps_measures(const EpsSystem &s, const VectorXd &u);

struct BoundCheck {
    double M_value = 0;
    double data = 0;  // eps max|f^j| + |f|_L2 + sum_k |g^k|_L1   (a^k = 0 for Tresca)
    double ratio = 0; // M / data (0 when data vanishes)
    double cond = 0;  // data * max_{k>=1} 1/M^k, to compare with 1/2 (C'_0 = 1)
};
BoundCheck bound_check(const EpsSystem &s, const VectorXd &u);

} // namespace layerhom
