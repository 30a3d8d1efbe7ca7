#pragma once

#include <array>

#include <Eigen/Core>

#include "layerhom/geometry.hpp"

namespace layerhom {

using Mat24 = Eigen::Matrix<double, 24, 24>;
using Vec24 = Eigen::Matrix<double, 24, 1>;

// 2x2x2 Gauss rule on an axis-aligned trilinear hex. Local dofs are
// ordered 3*corner + component.
struct HexQuadrature {
    std::array<Vec3, 8> points;                          // physical coordinates
    double weight = 0;                                   // same for all points
    std::array<Eigen::Matrix<double, 8, 1>, 8> N;        // N[q](c)
    std::array<Eigen::Matrix<double, 3, 8>, 8> dN;       // dN[q](d, c) = dN_c/dx_d
};

HexQuadrature hex_quadrature(const Vec3 &lo, const Vec3 &hi);

// Symmetric gradient at quadrature point q.
Eigen::Matrix3d hex_strain(const HexQuadrature &Q, int q, const Vec24 &ue);
// Full gradient (row i: d u_i / d x_j).
Eigen::Matrix3d hex_gradient(const HexQuadrature &Q, int q, const Vec24 &ue);
Vec3 hex_value(const HexQuadrature &Q, int q, const Vec24 &ue);

// sigma = 2 mu e + lambda tr(e) I
Mat24 hex_stiffness(const Vec3 &size, double lambda, double mu);
Mat24 hex_mass(const Vec3 &size);
Mat24 hex_laplacian(const Vec3 &size);

// 2x2 Gauss rule on an axis-aligned rectangle, bilinear in the 4 facet
// corners ordered by increasing corner bit pattern of the in-plane axes.
struct QuadQuadrature {
    std::array<Vec3, 4> points;
    double weight = 0;
    std::array<Eigen::Vector4d, 4> N;
};
QuadQuadrature quad_quadrature(const Vec3 &lo, const Vec3 &hi, int axis);

} // namespace layerhom
