#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "layerhom/mesh.hpp"

namespace layerhom {

using Eigen::VectorXd;

// T_eps(phi): per cell xi, the values at the cell-mesh nodes (ncomp per node).
// Pure re-indexing of a field on the layer mesh.
struct UnfoldedField {
    double eps = 0;
    int ncomp = 1;
    std::shared_ptr<const HexMesh> cell_mesh;
    std::vector<VectorXd> cells;
};

UnfoldedField unfold(const HexMesh &layer, const VectorXd &field, int ncomp);

// Nodal traces on crack facets, one value per facet corner.
using FacetTrace = std::vector<Eigen::Vector4d>; // indexed by facet

FacetTrace facet_trace(const HexMesh &mesh, const VectorXd &field, int ncomp, int comp, bool plus_side);

// T^{bl,j}_eps(psi): per cell, a trace on the cell-mesh facets of crack j
// (entries of other cracks stay zero).
struct UnfoldedTrace {
    double eps = 0;
    int crack = 0;
    std::shared_ptr<const HexMesh> cell_mesh;
    std::vector<FacetTrace> cells;
};

UnfoldedTrace unfold_boundary(const HexMesh &layer, const FacetTrace &trace, int crack);
// Trace of an unfolded volume field on omega x S^j.
UnfoldedTrace trace_of(const UnfoldedField &U, int crack, int comp, bool plus_side);

// Quadrature on the layer part of the mesh (elements that belong to a cell).
double layer_integral(const HexMesh &layer, const VectorXd &phi, int ncomp = 1, int comp = 0);
double layer_l2(const HexMesh &layer, const VectorXd &phi);
// (eps/|Y'|) int_{omega x Y} T(phi)
double unfolded_integral(const UnfoldedField &U, int comp = 0);
// ||T(phi)||_{L2(omega x Y)}
double unfolded_l2(const UnfoldedField &U);

double trace_integral(const HexMesh &layer, const FacetTrace &psi, int crack);
double trace_norm(const HexMesh &layer, const FacetTrace &psi, int crack, int p);
double unfolded_trace_integral(const UnfoldedTrace &T);
double unfolded_trace_norm(const UnfoldedTrace &T, int p);

struct GradientResidual {
    double gradient = 0; // max |grad_y T(phi) - eps T(grad phi)|
    double strain = 0;   // same for the symmetric gradient (ncomp == 3)
    double scale = 0;    // max eps |grad phi|
};
GradientResidual check_gradient_identity(const HexMesh &layer, const VectorXd &field, int ncomp);

// Relative residuals of the four unfolding identities for a displacement field.
struct UnfoldReport {
    double eps = 0;
    std::vector<std::pair<std::string, double>> residuals;
    double max_residual() const;
};
UnfoldReport unfold_check(const HexMesh &layer, const VectorXd &u);

} // namespace layerhom
