#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace layerhom {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec3 = Eigen::Vector3d;

// Axis-aligned box [lo, hi]. Planar rectangles (open cracks) use the same
// representation with lo[a] == hi[a] along their normal axis a.
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    static Box from_array(const std::array<double, 6> &c);
    double volume() const { return (hi - lo).prod(); }
    Vec3 center() const { return 0.5 * (lo + hi); }
    // Normal axis of a planar rectangle, -1 if not exactly one degenerate extent.
    int planar_axis() const;
    double area() const; // rectangle area (planar only)
    double surface_area() const;
};

// Closed-set intersection test of two boxes.
bool closures_intersect(const Box &a, const Box &b);

struct CellSpec {
    std::vector<Box> inclusions;
    std::vector<Box> open_cracks;
};

struct CellGeometry {
    std::vector<Box> inclusions;  // Y^1..Y^m (index j-1)
    std::vector<Box> open_cracks; // pieces of S^0
    double eta = 0;               // min distance of any crack to the cell boundary
    double normal_clearance = 0;  // min two-sided clearance of open cracks along their normal
    double t0 = 0;                // min(normal_clearance, eta)
    std::vector<Vec3> centers;    // O^j

    int num_inclusions() const { return int(inclusions.size()); }
    bool has_open_cracks() const { return !open_cracks.empty(); }
    // Total area of the crack S^j (j = 0: open cracks, j >= 1: inclusion boundary).
    double crack_area(int j) const;
    // Volume of Y^0 (matrix).
    double matrix_volume() const;
};

CellGeometry build_unit_cell(const CellSpec &spec);

struct Rect2 {
    double wx = 1, wy = 1;
    double area() const { return wx * wy; }
};

struct LayeredDomain {
    CellGeometry cell;
    Rect2 omega;
    double L = 1;
    double eps = 0.5;
    int nx = 0, ny = 0;                   // whole cells along x and y
    std::vector<std::array<int, 2>> xi_set; // x-index fastest
    double hat_area = 0;                  // |omega_hat| = |Xi| eps^2
    double lambda_area = 0;               // |Lambda|
    bool exact = false;                   // omega sides are integer multiples of eps
    std::vector<std::string> warnings;

    int num_cells() const { return int(xi_set.size()); }
    int cell_index(int i, int j) const { return i + nx * j; }
};

LayeredDomain tile_layer(const CellGeometry &cell, const Rect2 &omega, double L, double eps);

// Nearest integer multiple test with a relative tolerance.
bool is_multiple(double x, double step, int *count = nullptr);

} // namespace layerhom
