#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "layerhom/geometry.hpp"

namespace layerhom {

enum class Region : std::uint8_t { BlockB = 0, BlockA = 1, Matrix = 2, Inclusion = 3 };
const char *region_name(Region r);

// How inclusions enter a mesh: as separate bodies with duplicated boundary
// nodes, bonded to the matrix, or removed.
enum class InclusionMode { Contact, Glued, Hole };
InclusionMode parse_inclusion_mode(const std::string &s);
const char *inclusion_mode_name(InclusionMode m);

// Corner c of a hex sits at (cx, cy, cz) with c = cx + 2 cy + 4 cz.
struct HexElement {
    std::array<int, 8> nodes{};
    Region region = Region::Matrix;
    int inclusion = -1; // 0-based inclusion index for Region::Inclusion
    int cell = -1;      // index into the layer's xi_set (layer elements only)
    int local = -1;     // element index within the cell mesh (layer elements only)
    std::array<int, 3> grid{}; // structured index of the lower corner
    Vec3 lo, hi;
    Vec3 size() const { return hi - lo; }
};

// A crack facet: two coincident quadrilaterals with distinct nodes.
// Jump convention: [v] = v(plus) - v(minus); nu = sign * e_axis points from
// the plus body towards the minus body. For closed cracks the plus side is the
// inclusion, so nu is the inclusion's outward normal; for open cracks the plus
// side is the lower-coordinate side and nu = +e_axis.
struct CrackFacet {
    std::array<int, 4> plus{}, minus{};
    int axis = 0;
    int sign = 1;
    int crack = 0; // 0: open crack, j >= 1: boundary of inclusion j
    int cell = -1;
    int local = -1; // facet index within the cell mesh
    int lower_element = -1;
    double area = 0;
    Vec3 lo, hi;
    Vec3 normal() const { Vec3 n = Vec3::Zero(); n[axis] = sign; return n; }
};

// A face across which the mesh is split without a crack model (used at Sigma
// for the two-block meshes of the limit problem).
struct SplitFacet {
    std::array<int, 4> below{}, above{};
    int axis = 2;
    double area = 0;
    Vec3 lo, hi;
};

struct HexMesh {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 3>> node_grid; // structured grid index per node
    std::vector<HexElement> elements;
    std::vector<CrackFacet> crack_facets;
    std::vector<SplitFacet> split_facets;
    std::vector<double> xs, ys, zs; // grid lines
    double eps = 1;                 // layer thickness (1 for the unit cell)
    int n_cell = 0;                 // cell subdivisions per axis

    // Layer meshes only.
    std::shared_ptr<const HexMesh> cell_mesh;
    std::vector<std::array<int, 2>> xi;        // cell translations
    std::vector<std::vector<int>> cell_nodes;  // [cell][cell-mesh node] -> node

    // Cell meshes only: periodic master node (itself when not a slave).
    std::vector<int> periodic_master;

    int num_nodes() const { return int(nodes.size()); }
    int num_dofs() const { return 3 * num_nodes(); }
    int num_cracks() const; // max crack id + 1 (at least 1)

    // Nodes whose grid index lies on a boundary plane of the structured grid.
    std::vector<int> nodes_on_plane(int axis, bool upper) const;
    std::vector<int> nodes_with_grid(int axis, int index) const;
    std::vector<int> element_ids(Region r) const;
};

HexMesh mesh_cell(const CellGeometry &cell, int n, InclusionMode mode = InclusionMode::Contact);

// Omega^b, the eps-layer and Omega^a in one mesh. Requires exact tiling.
HexMesh mesh_assembly(const LayeredDomain &domain, int n_cell, int n_block,
                      InclusionMode mode = InclusionMode::Contact);

// The two blocks of the limit problem, Omega^b = omega x (-L,0) and
// Omega^a = omega x (0,L), split at Sigma with in-plane spacing h.
HexMesh mesh_blocks(const Rect2 &omega, double L, double h, int n_block);

// Geometric grading: n sizes starting at h0 that sum to total.
std::vector<double> graded_sizes(double total, double h0, int n);

struct Jump {
    double normal = 0;
    Vec3 tangential = Vec3::Zero();
};
// Jump at facet corner k (0..3).
Jump jump(const Eigen::VectorXd &u, const CrackFacet &f, int k);

// Lumped contact quadrature: one node per (plus, minus, normal) pair.
struct ContactNode {
    int plus = -1, minus = -1;
    int axis = 0, sign = 1;
    int crack = 0;
    int cell = -1;
    double weight = 0; // sum of facet areas / 4
    Vec3 x;            // position in the mesh
    Vec3 normal() const { Vec3 n = Vec3::Zero(); n[axis] = sign; return n; }
};
std::vector<ContactNode> lumped_contact_nodes(const HexMesh &mesh);

// Structured index of corner c of element e.
inline std::array<int, 3> corner_offset(int c) { return {c & 1, (c >> 1) & 1, (c >> 2) & 1}; }

} // namespace layerhom
