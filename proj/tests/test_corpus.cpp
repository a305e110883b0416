#include "subgrad/corpus.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace sg;
using sgtest::vec;

TEST_CASE("benchmark list")
{
    const auto names = list_benchmarks();
    CHECK(names.size() == 6);
    for (const char* n : {"abs1d", "quad1d", "maxlin2d", "ridge2d", "vee_pow", "nonconvex_ring"})
        CHECK(std::find(names.begin(), names.end(), n) != names.end());
    CHECK_THROWS_AS(get_benchmark("rosenbrock"), UnknownBenchmark);
    CHECK(list_cells().size() == 5);
    CHECK_THROWS_AS(get_cell("moebius"), std::invalid_argument);
}

TEST_CASE("shapes of the stratifications")
{
    const auto& a = get_benchmark("abs1d");
    CHECK(a.strata.size() == 3);
    CHECK(a.strata.non_open_ids() == std::vector<int>{0});

    const auto& m = get_benchmark("maxlin2d");
    int points = 0, rays = 0, open = 0;
    for (const auto& M : m.strata.strata()) {
        if (M.dim == 0)
            ++points;
        else if (M.dim == 1)
            ++rays;
        else
            ++open;
    }
    CHECK(points == 1);
    CHECK(rays == 3);
    CHECK(open == 3);
}

TEST_CASE("every entry validates and its critical points are critical")
{
    for (const auto& name : list_benchmarks()) {
        INFO(name);
        const auto& e = get_benchmark(name);
        CHECK(validate_stratification(e.strata).passed());
        for (const Vector& c : e.critical_points)
            CHECK(critical_point_check(e.f, c, 1e-8));
        CHECK(e.f.box().contains(e.x0));
        CHECK(e.theta >= 0.01);
        CHECK(e.theta < 1.0);
        for (int s = 0; s < 5; ++s)
            CHECK(e.start_box.contains(random_start(e, s)));
    }
}

TEST_CASE("analytic KL exponents agree with the estimator")
{
    for (const auto& name : list_benchmarks()) {
        const auto& e = get_benchmark(name);
        for (const auto& [id, th] : e.known_theta) {
            INFO(name << " stratum " << id);
            const KLFit fit = estimate_kl(e.f, e.strata, id, e.f_star, 2000, 42, e.kl_epsilon);
            CHECK(std::abs(fit.theta - th) <= 0.02);
        }
    }
}

TEST_CASE("declared Lipschitz constants hold on samples")
{
    std::mt19937_64 rng(10);
    for (const auto& name : list_benchmarks()) {
        INFO(name);
        const auto& e = get_benchmark(name);
        const Box& B = e.f.box();
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double worst = 0.0;
        for (int s = 0; s < 2000; ++s) {
            Vector x(B.dim()), y(B.dim());
            for (Eigen::Index i = 0; i < B.dim(); ++i) {
                x[i] = B.lower[i] + (B.upper[i] - B.lower[i]) * U(rng);
                y[i] = B.lower[i] + (B.upper[i] - B.lower[i]) * U(rng);
            }
            worst = std::max(worst, std::abs(evaluate(e.f, x) - evaluate(e.f, y)) / (x - y).norm());
        }
        CHECK(worst <= e.f.lipschitz());
        // epsilon covers the whole box
        for (int s = 0; s < 200; ++s) {
            Vector x(B.dim());
            for (Eigen::Index i = 0; i < B.dim(); ++i)
                x[i] = B.lower[i] + (B.upper[i] - B.lower[i]) * U(rng);
            CHECK(std::abs(evaluate(e.f, x) - e.f_star) <= e.epsilon);
        }
    }
}

TEST_CASE("bound exponent selection")
{
    const auto& v = get_benchmark("vee_pow");
    CHECK(v.theta == doctest::Approx(2.0 / 3.0));
    CHECK(get_benchmark("abs1d").theta == 0.01);
    CHECK(get_benchmark("ridge2d").theta == 0.5);
    CHECK(bound_theta(v.strata, {}) == 0.01);
    CHECK(bound_theta(v.strata, {{1, 1.0}}) < 1.0);
}
