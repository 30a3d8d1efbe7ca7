#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace layerhom {

// Sum of monomials coef * prod x_k^pow_k in a fixed number of variables.
struct Polynomial {
    struct Term {
        double coef = 0;
        std::vector<int> pow;
    };
    int nvars = 0;
    std::vector<Term> terms;

    Polynomial() = default;
    explicit Polynomial(int n) : nvars(n) {}
    static Polynomial constant(int n, double c);

    double operator()(const double *x) const;
    double operator()(const Eigen::VectorXd &x) const { return (*this)(x.data()); }
    bool is_zero() const;
    bool is_constant() const;
};

// Sum of monomials such as "0.3 - 2*x1^2*x3 + y3" over the named variables.
Polynomial parse_polynomial(const std::string &text, const std::vector<std::string> &vars);

struct VectorPolynomial {
    std::array<Polynomial, 3> c;

    VectorPolynomial() = default;
    explicit VectorPolynomial(int n) : c{Polynomial(n), Polynomial(n), Polynomial(n)} {}
    static VectorPolynomial constant(int n, const Eigen::Vector3d &v);

    Eigen::Vector3d operator()(const double *x) const;
    bool is_zero() const { return c[0].is_zero() && c[1].is_zero() && c[2].is_zero(); }
    Polynomial &operator[](int i) { return c[i]; }
    const Polynomial &operator[](int i) const { return c[i]; }
};

} // namespace layerhom
