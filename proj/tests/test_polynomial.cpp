#include "subgrad/polynomial.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace sg;
using sgtest::vec;

namespace {

Polynomial random_poly(std::mt19937_64& rng, int n, int terms, int maxdeg)
{
    std::uniform_int_distribution<int> D(0, maxdeg);
    std::uniform_real_distribution<double> C(-2.0, 2.0);
    Polynomial p(n);
    for (int t = 0; t < terms; ++t) {
        Exponents e(n);
        for (auto& x : e)
            x = D(rng);
        p.add_term(e, C(rng));
    }
    return p;
}

} // namespace

TEST_CASE("evaluation of simple polynomials")
{
    Polynomial p(2);
    p.add_term({2, 0}, 1.0).add_term({0, 1}, -3.0).add_term({0, 0}, 0.5);
    CHECK(p(vec({2.0, 1.0})) == doctest::Approx(4.0 - 3.0 + 0.5));
    CHECK(p.degree() == 2);
    CHECK(Polynomial::constant(3, 7.0)(vec({1, 2, 3})) == 7.0);
    CHECK(Polynomial::variable(3, 1, 2.0)(vec({1, 2, 3})) == 4.0);
    CHECK(Polynomial::affine(vec({1.0, -1.0}), 2.0)(vec({3.0, 5.0})) == 0.0);
}

TEST_CASE("arithmetic agrees with pointwise evaluation")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Polynomial a = random_poly(rng, 2, 4, 3), b = random_poly(rng, 2, 4, 3);
        const Vector x = sgtest::uniform(rng, 2, -1.5, 1.5);
        CHECK((a + b)(x) == doctest::Approx(a(x) + b(x)).epsilon(1e-12));
        CHECK((a - b)(x) == doctest::Approx(a(x) - b(x)).epsilon(1e-12));
        CHECK((a * 2.5)(x) == doctest::Approx(2.5 * a(x)).epsilon(1e-12));
        CHECK((a * b)(x) == doctest::Approx(a(x) * b(x)).epsilon(1e-10));
    }
}

TEST_CASE("gradient matches central differences")
{
    std::mt19937_64 rng(11);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3;
        const Polynomial p = random_poly(rng, n, 5, 4);
        const Vector x = sgtest::uniform(rng, n, -1.0, 1.0);
        const Vector g = p.gradient(x);
        Vector fd(n);
        for (int i = 0; i < n; ++i) {
            Vector e = Vector::Zero(n);
            e[i] = h;
            fd[i] = (p(x + e) - p(x - e)) / (2 * h);
        }
        CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
}

TEST_CASE("hessian matches differences of the gradient")
{
    std::mt19937_64 rng(12);
    const double h = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3;
        const Polynomial p = random_poly(rng, n, 5, 4);
        const Vector x = sgtest::uniform(rng, n, -1.0, 1.0);
        const Matrix H = p.hessian(x);
        Matrix fd(n, n);
        for (int i = 0; i < n; ++i) {
            Vector e = Vector::Zero(n);
            e[i] = h;
            fd.col(i) = (p.gradient(x + e) - p.gradient(x - e)) / (2 * h);
        }
        CHECK((H - fd).norm() <= 1e-5 * std::max(1.0, H.norm()));
        CHECK((H - H.transpose()).norm() == 0.0);
    }
}

TEST_CASE("poly map jacobian")
{
    PolyMap m;
    Polynomial a(2), b(2);
    a.add_term({1, 1}, 1.0);
    b.add_term({2, 0}, 1.0).add_term({0, 3}, 2.0);
    m.comps = {a, b};
    const Vector x = vec({0.5, -1.0});
    const Matrix J = m.jacobian(x);
    CHECK(J.rows() == 2);
    CHECK(J.cols() == 2);
    CHECK(J(0, 0) == doctest::Approx(-1.0));
    CHECK(J(0, 1) == doctest::Approx(0.5));
    CHECK(J(1, 0) == doctest::Approx(1.0));
    CHECK(J(1, 1) == doctest::Approx(6.0));
    CHECK(m(x)[1] == doctest::Approx(0.25 - 2.0));
}

TEST_CASE("dimension mismatch is reported")
{
    Polynomial p(2);
    p.add_term({1, 0}, 1.0);
    CHECK_THROWS_AS(p(vec({1.0})), DimensionMismatch);
}
