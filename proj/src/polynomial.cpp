#include "subgrad/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace sg {

namespace {

double ipow(double x, int e)
{
    double r = 1.0;
    for (int i = 0; i < e; ++i)
        r *= x;
    return r;
}

void check_dim(const Polynomial& p, const Vector& x)
{
    if (x.size() != p.nvars())
        throw DimensionMismatch("polynomial in " + std::to_string(p.nvars()) +
                                " variables evaluated at a point of dimension " +
                                std::to_string(x.size()));
}

} // namespace

Polynomial Polynomial::constant(int nvars, double c)
{
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
}

Polynomial Polynomial::variable(int nvars, int i, double coeff)
{
    Polynomial p(nvars);
    Exponents e(nvars, 0);
    e[i] = 1;
    p.add_term(e, coeff);
    return p;
}

Polynomial Polynomial::affine(const Vector& a, double b)
{
    const int n = static_cast<int>(a.size());
    Polynomial p(n);
    for (int i = 0; i < n; ++i) {
        if (a[i] == 0.0)
            continue;
        Exponents e(n, 0);
        e[i] = 1;
        p.add_term(e, a[i]);
    }
    if (b != 0.0 || p.terms_.empty())
        p.add_term(Exponents(n, 0), b);
    return p;
}

Polynomial& Polynomial::add_term(const Exponents& e, double coeff)
{
    if (static_cast<int>(e.size()) != nvars_)
        throw DimensionMismatch("exponent tuple has wrong length");
    for (int k : e)
        if (k < 0)
            throw std::invalid_argument("negative exponent");
    terms_[e] += coeff;
    return *this;
}

double Polynomial::operator()(const Vector& x) const
{
    check_dim(*this, x);
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
        double m = c;
        for (int i = 0; i < nvars_; ++i)
            m *= ipow(x[i], e[i]);
        s += m;
    }
    return s;
}

Vector Polynomial::gradient(const Vector& x) const
{
    check_dim(*this, x);
    Vector g = Vector::Zero(nvars_);
    for (const auto& [e, c] : terms_) {
        for (int i = 0; i < nvars_; ++i) {
            if (e[i] == 0)
                continue;
            double m = c * e[i];
            for (int j = 0; j < nvars_; ++j)
                m *= ipow(x[j], j == i ? e[j] - 1 : e[j]);
            g[i] += m;
        }
    }
    return g;
}

Matrix Polynomial::hessian(const Vector& x) const
{
    check_dim(*this, x);
    Matrix h = Matrix::Zero(nvars_, nvars_);
    for (const auto& [e, c] : terms_) {
        for (int i = 0; i < nvars_; ++i) {
            for (int j = i; j < nvars_; ++j) {
                Exponents d = e;
                double m = c;
                m *= d[i];
                if (d[i] == 0)
                    continue;
                --d[i];
                m *= d[j];
                if (d[j] == 0)
                    continue;
                --d[j];
                for (int l = 0; l < nvars_; ++l)
                    m *= ipow(x[l], d[l]);
                h(i, j) += m;
                if (i != j)
                    h(j, i) += m;
            }
        }
    }
    return h;
}

int Polynomial::degree() const
{
    int d = 0;
    for (const auto& [e, c] : terms_) {
        if (c == 0.0)
            continue;
        int s = 0;
        for (int k : e)
            s += k;
        d = std::max(d, s);
    }
    return d;
}

Polynomial Polynomial::operator+(const Polynomial& o) const
{
    if (o.nvars_ != nvars_)
        throw DimensionMismatch("polynomial sum with mismatched variables");
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_)
        r.terms_[e] += c;
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(double s) const
{
    Polynomial r = *this;
    for (auto& [e, c] : r.terms_)
        c *= s;
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const
{
    if (o.nvars_ != nvars_)
        throw DimensionMismatch("polynomial product with mismatched variables");
    Polynomial r(nvars_);
    for (const auto& [e1, c1] : terms_)
        for (const auto& [e2, c2] : o.terms_) {
            Exponents e(nvars_);
            for (int i = 0; i < nvars_; ++i)
                e[i] = e1[i] + e2[i];
            r.terms_[e] += c1 * c2;
        }
    return r;
}

Vector PolyMap::operator()(const Vector& a) const
{
    Vector r(out_dim());
    for (int i = 0; i < out_dim(); ++i)
        r[i] = comps[i](a);
    return r;
}

Matrix PolyMap::jacobian(const Vector& a) const
{
    Matrix j(out_dim(), in_dim());
    for (int i = 0; i < out_dim(); ++i)
        j.row(i) = comps[i].gradient(a).transpose();
    return j;
}

} // namespace sg
