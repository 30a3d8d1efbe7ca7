#include "layerhom/fem.hpp"

#include <cmath>

namespace layerhom {

namespace {
const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
}

HexQuadrature hex_quadrature(const Vec3 &lo, const Vec3 &hi) {
    HexQuadrature Q;
    const Vec3 h = hi - lo;
    Q.weight = h.prod() / 8.0;
    for (int q = 0; q < 8; ++q) {
        const double s[3] = {gp[q & 1], gp[(q >> 1) & 1], gp[(q >> 2) & 1]};
        Q.points[q] = lo + Vec3(s[0] * h[0], s[1] * h[1], s[2] * h[2]);
        for (int c = 0; c < 8; ++c) {
            double f[3], df[3];
            for (int d = 0; d < 3; ++d) {
                bool up = (c >> d) & 1;
                f[d] = up ? s[d] : 1 - s[d];
                df[d] = (up ? 1.0 : -1.0) / h[d];
            }
            Q.N[q](c) = f[0] * f[1] * f[2];
            Q.dN[q](0, c) = df[0] * f[1] * f[2];
            Q.dN[q](1, c) = f[0] * df[1] * f[2];
            Q.dN[q](2, c) = f[0] * f[1] * df[2];
        }
    }
    return Q;
}

Eigen::Matrix3d hex_gradient(const HexQuadrature &Q, int q, const Vec24 &ue) {
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    for (int c = 0; c < 8; ++c)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) G(i, j) += ue[3 * c + i] * Q.dN[q](j, c);
    return G;
}

Eigen::Matrix3d hex_strain(const HexQuadrature &Q, int q, const Vec24 &ue) {
    Eigen::Matrix3d G = hex_gradient(Q, q, ue);
    return 0.5 * (G + G.transpose());
}

Vec3 hex_value(const HexQuadrature &Q, int q, const Vec24 &ue) {
    Vec3 v = Vec3::Zero();
    for (int c = 0; c < 8; ++c) v += Q.N[q](c) * ue.segment<3>(3 * c);
    return v;
}

Mat24 hex_stiffness(const Vec3 &size, double lambda, double mu) {
    HexQuadrature Q = hex_quadrature(Vec3::Zero(), size);
    Mat24 K = Mat24::Zero();
    Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) D(i, j) = lambda;
        D(i, i) += 2 * mu;
        D(i + 3, i + 3) = mu;
    }
    for (int q = 0; q < 8; ++q) {
        // Voigt order xx, yy, zz, yz, xz, xy with engineering shear
        Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
        for (int c = 0; c < 8; ++c) {
            const double dx = Q.dN[q](0, c), dy = Q.dN[q](1, c), dz = Q.dN[q](2, c);
            B(0, 3 * c) = dx;
            B(1, 3 * c + 1) = dy;
            B(2, 3 * c + 2) = dz;
            B(3, 3 * c + 1) = dz; B(3, 3 * c + 2) = dy;
            B(4, 3 * c) = dz;     B(4, 3 * c + 2) = dx;
            B(5, 3 * c) = dy;     B(5, 3 * c + 1) = dx;
        }
        K.noalias() += Q.weight * B.transpose() * D * B;
    }
    return 0.5 * (K + K.transpose());
}

Mat24 hex_mass(const Vec3 &size) {
    HexQuadrature Q = hex_quadrature(Vec3::Zero(), size);
    Mat24 M = Mat24::Zero();
    for (int q = 0; q < 8; ++q)
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) {
                double v = Q.weight * Q.N[q](a) * Q.N[q](b);
                for (int i = 0; i < 3; ++i) M(3 * a + i, 3 * b + i) += v;
            }
    return 0.5 * (M + M.transpose());
}

Mat24 hex_laplacian(const Vec3 &size) {
    HexQuadrature Q = hex_quadrature(Vec3::Zero(), size);
    Mat24 S = Mat24::Zero();
    for (int q = 0; q < 8; ++q)
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) {
                double v = Q.weight * Q.dN[q].col(a).dot(Q.dN[q].col(b));
                for (int i = 0; i < 3; ++i) S(3 * a + i, 3 * b + i) += v;
            }
    return 0.5 * (S + S.transpose());
}

QuadQuadrature quad_quadrature(const Vec3 &lo, const Vec3 &hi, int axis) {
    const int p = (axis == 0) ? 1 : 0;
    const int r = (axis == 2) ? 1 : 2;
    QuadQuadrature Q;
    const double hp = hi[p] - lo[p], hr = hi[r] - lo[r];
    Q.weight = hp * hr / 4.0;
    for (int q = 0; q < 4; ++q) {
        const double s = gp[q & 1], t = gp[q >> 1];
        Vec3 x = lo;
        x[p] += s * hp;
        x[r] += t * hr;
        Q.points[q] = x;
        for (int k = 0; k < 4; ++k)
            Q.N[q](k) = ((k & 1) ? s : 1 - s) * ((k >> 1) ? t : 1 - t);
    }
    return Q;
}

} // namespace layerhom
