#include "layerhom/polynomial.hpp"

#include <cctype>
#include <cstdlib>

#include "layerhom/geometry.hpp"

namespace layerhom {

Polynomial Polynomial::constant(int n, double c) {
    Polynomial p(n);
    if (c != 0) p.terms.push_back({c, std::vector<int>(n, 0)});
    return p;
}

double Polynomial::operator()(const double *x) const {
    double s = 0;
    for (const auto &t : terms) {
        double v = t.coef;
        for (int k = 0; k < nvars; ++k)
            for (int e = 0; e < t.pow[k]; ++e) v *= x[k];
        s += v;
    }
    return s;
}

bool Polynomial::is_zero() const {
    for (const auto &t : terms)
        if (t.coef != 0) return false;
    return true;
}

bool Polynomial::is_constant() const {
    for (const auto &t : terms)
        for (int p : t.pow)
            if (p != 0 && t.coef != 0) return false;
    return true;
}

namespace {

struct Parser {
    const std::string &s;
    const std::vector<std::string> &vars;
    size_t i = 0;

    [[noreturn]] void fail(const std::string &what) const {
        throw Error("polynomial '" + s + "': " + what + " at position " + std::to_string(i));
    }
    void skip() {
        while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
    }
    bool eat(char c) {
        skip();
        if (i < s.size() && s[i] == c) return ++i, true;
        return false;
    }
    // factor := number | var ['^' int]
    void factor(Polynomial::Term &t) {
        skip();
        if (i >= s.size()) fail("unexpected end");
        if (std::isdigit((unsigned char)s[i]) || s[i] == '.') {
            char *end = nullptr;
            const double v = std::strtod(s.c_str() + i, &end);
            if (end == s.c_str() + i) fail("bad number");
            i = size_t(end - s.c_str());
            t.coef *= v;
            return;
        }
        size_t j = i;
        while (j < s.size() && (std::isalnum((unsigned char)s[j]) || s[j] == '_')) ++j;
        const std::string name = s.substr(i, j - i);
        int k = 0;
        while (k < int(vars.size()) && vars[k] != name) ++k;
        if (name.empty() || k == int(vars.size())) fail("unknown symbol '" + name + "'");
        i = j;
        int e = 1;
        if (eat('^')) {
            skip();
            j = i;
            while (j < s.size() && std::isdigit((unsigned char)s[j])) ++j;
            if (j == i) fail("exponent must be a nonnegative integer");
            e = std::atoi(s.substr(i, j - i).c_str());
            i = j;
        }
        t.pow[k] += e;
    }
    Polynomial parse() {
        Polynomial p(int(vars.size()));
        double sign = 1;
        if (eat('-')) sign = -1;
        else eat('+');
        for (;;) {
            Polynomial::Term t{sign, std::vector<int>(vars.size(), 0)};
            factor(t);
            while (eat('*')) factor(t);
            p.terms.push_back(t);
            if (eat('+')) sign = 1;
            else if (eat('-')) sign = -1;
            else break;
        }
        skip();
        if (i != s.size()) fail("unexpected '" + std::string(1, s[i]) + "'");
        return p;
    }
};

} // namespace

Polynomial parse_polynomial(const std::string &text, const std::vector<std::string> &vars) {
    return Parser{text, vars}.parse();
}

VectorPolynomial VectorPolynomial::constant(int n, const Eigen::Vector3d &v) {
    VectorPolynomial p;
    for (int i = 0; i < 3; ++i) p.c[i] = Polynomial::constant(n, v[i]);
    return p;
}

Eigen::Vector3d VectorPolynomial::operator()(const double *x) const {
    return Eigen::Vector3d(c[0](x), c[1](x), c[2](x));
}

} // namespace layerhom
