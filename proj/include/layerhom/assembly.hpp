#pragma once

#include <string>
#include <vector>

#include "layerhom/constraints.hpp"
#include "layerhom/fem.hpp"
#include "layerhom/mesh.hpp"
#include "layerhom/polynomial.hpp"

namespace layerhom {

struct Material {
    double lambda = 1;
    double mu = 1;
    void validate(const std::string &name) const;
};

struct MaterialSet {
    Material a, b, matrix, inclusion;
    const Material &of(Region r) const;
    void validate() const;
    // 2 min(mu) over regions
    double coercivity() const;
};

// Layer regions carry the eps factor of the soft layer.
inline double region_scale(Region r, double eps) {
    return (r == Region::Matrix || r == Region::Inclusion) ? eps : 1.0;
}

struct RegionWeights {
    double b = 1, a = 1, matrix = 1, inclusion = 1;
    double of(Region r) const;
};

SpMat assemble_stiffness(const HexMesh &mesh, const MaterialSet &mat, double eps);
// sum_r w_r int e(u):e(v)
SpMat assemble_strain_form(const HexMesh &mesh, const RegionWeights &w);
// sum_r w_r int u.v
SpMat assemble_mass(const HexMesh &mesh, const RegionWeights &w);
// sum_r w_r int grad u : grad v
SpMat assemble_gradient_form(const HexMesh &mesh, const RegionWeights &w);

// Strain at the 8 Gauss points of element e.
std::array<Eigen::Matrix3d, 8> strain(const VectorXd &u, const HexMesh &mesh, int e);
Vec24 element_values(const VectorXd &u, const HexElement &e);

struct Loads {
    VectorPolynomial f{3};                // body force on Omega*, variables x
    bool f_regions[4] = {true, true, true, true}; // indexed by Region; inclusions never get f
    std::vector<VectorPolynomial> F;      // per inclusion, variables (x1, x2, y1, y2, y3)
};

// int f.v over Omega* plus sum_j int (1/eps) F^j(eps xi, y).v^j over the inclusions.
VectorXd assemble_load(const HexMesh &mesh, const Loads &loads, double eps);
// Constant traction t on the structured boundary plane (axis, upper).
VectorXd assemble_traction(const HexMesh &mesh, int axis, bool upper, const Vec3 &t);

// Gap, friction bound and its lower bound for one crack id.
struct CrackData {
    Polynomial g = Polynomial::constant(3, 0);   // g(y)
    Polynomial G = Polynomial::constant(5, 1);   // G(x1, x2, y)
    double M = 0;                                // lower bound of G (0: take the sampled minimum)
};

struct NodalContact {
    ContactNode node;
    double gap = 0;
    double bound = 0;
    Vec3 y; // cell coordinates
};

// Evaluates g and G at the lumped contact nodes; validates g >= 0 and G >= M > 0.
std::vector<NodalContact> evaluate_contact(const HexMesh &mesh, const std::vector<CrackData> &data);
// Lower bounds actually used (M^j), one per crack id.
std::vector<double> friction_lower_bounds(const std::vector<NodalContact> &nodes,
                                          const std::vector<CrackData> &data, int n_cracks);

struct EnergyBreakdown {
    double elastic_b = 0, elastic_a = 0, elastic_matrix = 0, elastic_inclusions = 0;
    std::vector<double> friction; // per crack id
    double load_work = 0;
    double xi = 0;  // eps-weighted strain norm
    double eta = 0; // L1 norms of positive normal and tangential jumps on closed cracks
    double M_value = 0;
    double E_value = 0;
    double total = 0;
};

EnergyBreakdown measures(const HexMesh &mesh, const MaterialSet &mat, const VectorXd &f,
                         const std::vector<NodalContact> &contact, const VectorXd &u);

// Gamma as a union of faces of Omega^b: "bottom", "x0", "x1", "y0", "y1".
std::vector<int> gamma_nodes(const HexMesh &mesh, const std::vector<std::string> &faces);

} // namespace layerhom
