#include "subgrad/cells.hpp"
#include "subgrad/corpus.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace sg;
using sgtest::vec;

namespace {

Polynomial x_of(double c = 1.0) { return Polynomial::variable(1, 0, c); }

} // namespace

TEST_CASE("cell construction")
{
    const LRegularCell I = cells::interval(0, 1);
    CHECK(I.dim() == 1);
    CHECK(I.ambient_dim() == 1);
    const LRegularCell G = cells::graph(I, x_of(), 1.0);
    CHECK(G.dim() == 1);
    CHECK(G.ambient_dim() == 2);
    const LRegularCell B = cells::band(I, Polynomial::constant(1, 0), x_of(), 1.0);
    CHECK(B.dim() == 2);
    CHECK(contains(B, vec({0.5, 0.25})));
    CHECK(!contains(B, vec({0.5, 0.75})));
    CHECK(contains(G, vec({0.4, 0.4})));

    CHECK_THROWS_AS(cells::interval(1, 0), InvalidCell);
    const LRegularCell cube3 = cells::band(cells::band(I, Polynomial::constant(1, 0),
                                                       Polynomial::constant(1, 1), 1.0),
                                           Polynomial::constant(2, 0), Polynomial::constant(2, 1), 1.0);
    CHECK(cube3.dim() == 3);
    CHECK_THROWS_AS(cells::graph(cube3, Polynomial::constant(3, 0), 1.0), InvalidCell);
    CHECK_THROWS_AS(cells::graph(I, Polynomial::constant(2, 0), 1.0), DimensionMismatch);
}

TEST_CASE("frontier distance")
{
    const LRegularCell I = cells::interval(0, 1);
    CHECK(frontier_distance(I, vec({0.3})) == doctest::Approx(0.3));
    CHECK(frontier_distance(cells::singleton(0.5), vec({0.5})) == kInf);
    const LRegularCell sq = get_cell("square").cell;
    CHECK(frontier_distance(sq, vec({0.2, 0.6})) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(frontier_distance(sq, vec({0.5, 0.5})) == doctest::Approx(0.5).epsilon(1e-6));
    // Triangle: nearest frontier point of (0.6, 0.3) is on the diagonal.
    const LRegularCell tri = get_cell("triangle").cell;
    CHECK(frontier_distance(tri, vec({0.6, 0.3})) == doctest::Approx(0.3 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("cell validation")
{
    for (const auto& name : list_cells())
        CHECK(validate_cell(get_cell(name).cell).passed());
    // t^2 on (0,1) has slope up to 2.
    const LRegularCell steep = cells::graph(cells::interval(0, 1), x_of() * x_of(), 1.0);
    CHECK(!validate_cell(steep).passed());
    const LRegularCell crossed = cells::band(cells::interval(0, 1), x_of(), Polynomial::constant(1, 0.5), 1.0);
    CHECK(!validate_cell(crossed).passed());
}

TEST_CASE("shrink examples")
{
    const ShrunkenCell I = shrink_cell(cells::interval(0, 1), 0.1);
    CHECK(I.cell.a == doctest::Approx(0.1));
    CHECK(I.cell.b == doctest::Approx(0.9));
    CHECK(I.margin() == doctest::Approx(0.1));

    const ShrunkenCell G = shrink_cell(cells::graph(cells::interval(0, 1), x_of(), 1.0), 0.2);
    CHECK(G.cell.base->a == doctest::Approx(0.2 / std::sqrt(3.0)));
    CHECK(G.cell.base->b == doctest::Approx(1.0 - 0.2 / std::sqrt(3.0)));
    CHECK(G.rho == doctest::Approx(1.0 / std::sqrt(3.0)));

    const ShrunkenCell T = shrink_cell(get_cell("triangle").cell, 0.1, {1.0, 1.0});
    CHECK(T.beta == doctest::Approx(0.1 / (2.0 * std::sqrt(3.0))));
    CHECK(T.rho == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0) * std::sqrt(3.0))));
    CHECK(T.theta == 1.0);
    CHECK(T.margin() == doctest::Approx(0.020412).epsilon(1e-4));
    CHECK(T.cell.base->a == doctest::Approx(0.1 / std::sqrt(3.0)));

    CHECK_THROWS_AS(shrink_cell(cells::interval(0, 1), 0.6), DegenerateCell);
    CHECK_THROWS_AS(shrink_cell(cells::interval(0, 1), 0.0), std::invalid_argument);
    // Margin constant too large for the band.
    CHECK_THROWS_AS(shrink_cell(get_cell("square").cell, 0.1, {100.0, 1.0}), InvalidCell);
}

TEST_CASE("inclusions hold and the corrupted margin is caught")
{
    for (const auto& name : list_cells()) {
        const NamedCell nc = get_cell(name);
        for (double t : {0.02, 0.05, 0.1}) {
            INFO(name << " t=" << t);
            const ShrunkenCell Mt = shrink_cell(nc.cell, t, nc.params);
            const InclusionReport r = verify_inclusions(nc.cell, Mt, 2000);
            CHECK(r.left_violations == 0);
            CHECK(r.right_violations == 0);
        }
    }
    ShrinkParams bad = get_cell("triangle").params;
    bad.margin_scale = 10.0;
    const ShrunkenCell Mt = shrink_cell(get_cell("triangle").cell, 0.1, bad);
    CHECK(verify_inclusions(get_cell("triangle").cell, Mt, 2000).right_violations > 0);
}

TEST_CASE("quasiconvexity")
{
    CHECK(quasiconvexity_estimate(get_cell("interval").cell, 200).C == doctest::Approx(1.0));
    CHECK(quasiconvexity_estimate(get_cell("square").cell, 200).C == doctest::Approx(1.0));
    CHECK(quasiconvexity_estimate(get_cell("triangle").cell, 200).C == doctest::Approx(1.0));
    // Parabola over (0,1): the worst ratio is arc over chord between the ends.
    const double arc = (2 * std::sqrt(5.0) + std::asinh(2.0)) / 4.0;
    const double qg = quasiconvexity_estimate(get_cell("graph").cell).C;
    CHECK(qg <= arc / std::sqrt(2.0) + 1e-9);
    CHECK(qg >= 1.03);
    // Regression baseline for the default sample.
    const double qh = quasiconvexity_estimate(get_cell("horseshoe").cell).C;
    CHECK(qh > 1.5);
    CHECK(qh == doctest::Approx(4.02248).epsilon(1e-4));
}
