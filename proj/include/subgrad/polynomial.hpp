#pragma once

#include "subgrad/types.hpp"

#include <map>
#include <vector>

namespace sg {

using Exponents = std::vector<int>;

// Sparse multivariate polynomial: exponent tuple -> coefficient.
// The ordered map keeps term order (and therefore summation order) stable.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(int nvars) : nvars_(nvars) {}

    static Polynomial constant(int nvars, double c);
    static Polynomial variable(int nvars, int i, double coeff = 1.0);
    // a.x + b
    static Polynomial affine(const Vector& a, double b);

    int nvars() const { return nvars_; }
    const std::map<Exponents, double>& terms() const { return terms_; }

    // Adds coeff to the term with the given exponents. Zero terms are kept so
    // that serialization round-trips exactly what was written.
    Polynomial& add_term(const Exponents& e, double coeff);

    double operator()(const Vector& x) const;
    Vector gradient(const Vector& x) const;
    Matrix hessian(const Vector& x) const;
    int degree() const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(double s) const;
    Polynomial operator*(const Polynomial& o) const;

    bool operator==(const Polynomial& o) const = default;

private:
    int nvars_ = 0;
    std::map<Exponents, double> terms_;
};

// Vector-valued polynomial map R^k -> R^m.
struct PolyMap {
    std::vector<Polynomial> comps;

    int in_dim() const { return comps.empty() ? 0 : comps.front().nvars(); }
    int out_dim() const { return static_cast<int>(comps.size()); }
    Vector operator()(const Vector& a) const;
    Matrix jacobian(const Vector& a) const; // out_dim x in_dim
};

} // namespace sg
