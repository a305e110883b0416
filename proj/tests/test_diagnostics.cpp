#include "subgrad/corpus.hpp"
#include "subgrad/diagnostics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace sg;
using sgtest::vec;

namespace {

// Twenty steps of f = |x| crossing the origin; x and I_C are frozen from
// tests/oracles/abs1d_crossing.py.
const std::vector<double> kCrossSteps = {0.5, 0.3, 1.5, 0.1, 0.1, 0.1, 0.1, 0.8, 0.3, 0.2, 0.2,
                                         0.05, 0.03, 0.9, 0.05, 0.05, 0.3, 0.1, 0.05, 0.05, 0.05};
const std::vector<double> kCrossX = {0.9,  0.4,  0.1,  -1.4, -1.3, -1.2, -1.1,
                                     -1.0, -0.2, 0.1,  -0.1, 0.1,  0.05, 0.02,
                                     -0.88, -0.83, -0.78, -0.48, -0.38, -0.33, -0.28};
const std::vector<long> kCrossIC = {1, 2, 7, 8, 9, 10, 11, 12, 13};

} // namespace

TEST_CASE("psi")
{
    CHECK(psi(8.0, 2.0 / 3.0) == doctest::Approx(2.0));
    CHECK(psi(-8.0, 2.0 / 3.0) == doctest::Approx(-2.0));
    CHECK(psi(0.0, 0.5) == 0.0);
    CHECK(psi(0.25, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("KL exponent fits")
{
    const auto& q = get_benchmark("quad1d");
    // |x^2|' = 2 |x| = 2 (x^2)^(1/2)
    const KLFit fq = estimate_kl(q.f, q.strata, 0, 0.0, 2000);
    CHECK(fq.theta == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(fq.eta == doctest::Approx(2.0).epsilon(1e-2));
    CHECK(fq.violations == 0);
    CHECK(kl_violations(q.f, q.strata, fq, 2000, 99) == 0);

    const auto& v = get_benchmark("vee_pow");
    // (x^3)' = 3 (x^3)^(2/3)
    const KLFit fv = estimate_kl(v.f, v.strata, 2, 0.0, 2000, 42, v.kl_epsilon);
    CHECK(fv.theta == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
    CHECK(std::abs(fv.eta - 3.0) <= 0.1);

    const auto& a = get_benchmark("abs1d");
    const KLFit fa = estimate_kl(a.f, a.strata, 2, 0.0, 2000);
    CHECK(fa.theta == doctest::Approx(0.0));
    CHECK(fa.eta == doctest::Approx(1.0));

    // Every sample of the point stratum sits on the critical level.
    CHECK_THROWS_AS(estimate_kl(a.f, a.strata, 0, 0.0, 100), DegenerateSamples);
}

TEST_CASE("neighbourhood membership")
{
    const auto& e = get_benchmark("maxlin2d");
    const double a = 0.01;
    CHECK(neighborhood_membership(vec({0.001, 0.5}), a, e.constants, e.strata) == std::vector<int>{1});
    CHECK(neighborhood_membership(vec({1.0, 0.5}), a, e.constants, e.strata) == std::vector<int>{4});
    const auto on_ray = neighborhood_membership(vec({0.0, 0.3}), a, e.constants, e.strata);
    CHECK(std::find(on_ray.begin(), on_ray.end(), 1) != on_ray.end());
    CHECK(std::find(on_ray.begin(), on_ray.end(), 4) == on_ray.end());
    CHECK(neighborhood_membership(vec({0.0, 0.0}), a, e.constants, e.strata) == std::vector<int>{0});

    ProofConstants missing = e.constants;
    missing.strata.erase(0);
    CHECK_THROWS_AS(neighborhood_membership(vec({0.0, 0.0}), a, missing, e.strata), ConstantsMissing);
}

TEST_CASE("index extraction")
{
    const auto& e = get_benchmark("abs1d");

    SUBCASE("no crossings")
    {
        const Trajectory tr =
            run(e.f, vec({0.9}), StepSchedule::constant(0.01), Policy::MinNorm, 5);
        const IndexTrace it = extract_indices(tr, e.constants, e.strata);
        CHECK(it.T == 1);
        CHECK(it.IC.empty());
        CHECK(it.L.empty());
    }

    SUBCASE("frozen crossing")
    {
        const Trajectory tr = run(e.f, vec({0.9}), StepSchedule::from_table(kCrossSteps),
                                  Policy::MinNorm, 20);
        REQUIRE(tr.K() == 20);
        for (long k = 0; k <= 20; ++k)
            CHECK(tr.x(k)[0] == doctest::Approx(kCrossX[k]).epsilon(1e-12));
        const IndexTrace it = extract_indices(tr, e.constants, e.strata);
        CHECK(it.IC == kCrossIC);
        for (long k : it.IC)
            CHECK(it.G.at(k) == 0);
        REQUIRE(!it.L.empty());
        CHECK(it.L.front() == 1);
    }

    SUBCASE("maxlin2d invariants")
    {
        const auto& m = get_benchmark("maxlin2d");
        const Trajectory tr = run(m.f, m.x0, m.schedule, Policy::MinNorm, 400);
        const IndexTrace it = extract_indices(tr, m.constants, m.strata);
        CHECK(it.T == 4);
        CHECK(std::is_sorted(it.IC.begin(), it.IC.end()));
        const auto open = m.strata.non_open_ids();
        for (long k : it.IC)
            CHECK(std::find(open.begin(), open.end(), it.G.at(k)) != open.end());
        for (size_t r = 0; r < it.L.size(); ++r) {
            const long l = it.L[r];
            CHECK(std::binary_search(it.IC.begin(), it.IC.end(), l));
            if (r > 0)
                CHECK(l > it.L[r - 1]);
            CHECK(it.s.at(l) >= l);
            CHECK(it.q.at(l) >= l);
            CHECK(it.q.at(l) <= it.s.at(l));
            if (it.H.at(l)) {
                CHECK(*it.H.at(l) >= it.s.at(l));
                CHECK(it.U.at(l) >= 1);
                CHECK(it.U.at(l) <= it.T + 1);
            }
        }
    }
}

TEST_CASE("projected trace and descent")
{
    const auto& e = get_benchmark("quad1d");
    ProofConstants pc = e.constants;
    pc.c = 1.0;
    pc.beta = 0.5;
    const Trajectory tr = run(e.f, vec({1.0}), StepSchedule::constant(0.1), Policy::MinNorm, 2);
    const ProjectedTrace pt = projected_trace(tr, e.f, e.strata, 0, pc);
    CHECK(pt.g[0] == doctest::Approx(2.0 * std::pow(0.1, 1.5)));
    CHECK(pt.g[1] == doctest::Approx(std::pow(0.1, 1.5)));
    CHECK(pt.g[2] == 0.0);
    CHECK(pt.d.isZero());
    CHECK(pt.z[1] == doctest::Approx(0.64 + std::pow(0.1, 1.5)));

    // With c = 0 the check is plain descent on x^2, which holds for steps up to 1/2.
    pc.c = 0.0;
    const Trajectory ok = run(e.f, vec({1.0}), StepSchedule::constant(0.1), Policy::MinNorm, 50);
    const DescentReport good = check_descent(projected_trace(ok, e.f, e.strata, 0, pc), pc);
    CHECK(good.violations == 0);
    CHECK(good.monotonicity_violations == 0);
    const Trajectory bad = run(e.f, vec({0.1}), StepSchedule::constant(1.5), Policy::MinNorm, 3);
    const DescentReport br = check_descent(projected_trace(bad, e.f, e.strata, 0, pc), pc);
    CHECK(br.violations == 3);
    CHECK(br.monotonicity_violations == 3);

    const Trajectory h = run(e.f, e.x0, e.schedule, e.policy, 10000);
    const DescentReport dr = check_descent(projected_trace(h, e.f, e.strata, 0, e.constants), e.constants);
    CHECK(dr.g_condition_checked);
    CHECK(dr.violations == 0);
    CHECK(dr.g_condition_violations == 0);
}

TEST_CASE("projected length")
{
    for (const char* name : {"quad1d", "ridge2d"}) {
        const auto& e = get_benchmark(name);
        const Trajectory tr = run(e.f, e.x0, e.schedule, e.policy, 2000);
        const int id = e.strata.non_open_ids().empty() ? 0 : e.strata.non_open_ids().front();
        const KLFit kl = estimate_kl(e.f, e.strata, id, e.f_star, 2000);
        const LengthReport r = projected_length_check(projected_trace(tr, e.f, e.strata, id, e.constants),
                                                      kl, e.constants);
        INFO(name);
        CHECK(r.lhs > 0.0);
        CHECK(r.holds);
        CHECK(r.rhs == doctest::Approx(r.psi_term + r.sum_term + r.tail_term));
    }
}

TEST_CASE("diameter bound")
{
    ProofConstants pc;
    pc.theta = 0.5;
    pc.beta = 0.5;
    pc.sigma1 = pc.sigma2 = 1.0;
    const BoundReport r = diameter_bound_rhs(1.0, 0.0, {0.5, 0.25}, pc);
    CHECK(r.psi_diff == doctest::Approx(1.0));
    CHECK(r.a0_beta == doctest::Approx(0.7071067811865476));
    CHECK(r.S == doctest::Approx(0.4785533905932738));
    CHECK(r.S_pow == doctest::Approx(0.6917755348328486));
    CHECK(r.double_sum == doctest::Approx(0.43427611506474273));
    CHECK(r.rhs == doctest::Approx(3.3117118216774126));
    CHECK(diameter_bound_rhs(0.3, 0.3, {0.5}, pc).psi_diff == 0.0);
    CHECK_THROWS_AS(diameter_bound_rhs(1, 0, {0.5, -0.1}, pc), InvalidSchedule);
    CHECK_THROWS_AS(diameter_bound_rhs(1, 0, {0.25, 0.5}, pc), NonDecreasingSchedule);

    const auto& e = get_benchmark("abs1d");
    const Trajectory still = run(e.f, vec({0.0}), e.schedule, e.policy, 100);
    CHECK(check_diameter_bound(still, e.constants).holds);

    const Trajectory moving = run(e.f, e.x0, e.schedule, e.policy, 100);
    ProofConstants zero = e.constants;
    zero.sigma1 = zero.sigma2 = 0.0;
    const BoundReport z = check_diameter_bound(moving, zero);
    CHECK(z.lhs > 0.0);
    CHECK(!z.holds);
    CHECK(z.hypotheses_ok);

    ProofConstants tight = e.constants;
    tight.epsilon = 0.01;
    CHECK(!check_diameter_bound(moving, tight).hypotheses_ok);

    const auto reps = prefix_bound_reports(moving, e.constants);
    REQUIRE(reps.size() == 8); // 1, 2, 4, ..., 64, then 100
    CHECK(reps.back().lhs == z.lhs);
}

TEST_CASE("double sum against the direct formula")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.01, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(50 + trial);
        for (auto& x : a)
            x = U(rng);
        const double be = 0.1 * trial, th = 0.05 + 0.09 * trial;
        double brute = 0;
        for (size_t k = 0; k < a.size(); ++k) {
            double inner = 0;
            for (size_t j = k; j < a.size(); ++j)
                inner += std::pow(a[j], 1 + be);
            brute += a[k] * std::pow(inner, th);
        }
        CHECK(double_sum(a, be, th) == doctest::Approx(brute).epsilon(1e-12));
    }
}

TEST_CASE("sigma fit")
{
    BoundReport still;
    still.psi_diff = 0.5;
    still.S = 0.2;
    still.lhs = 0.0;
    const SigmaFit s = fit_sigma({still, still});
    CHECK(s.sigma1 == doctest::Approx(1e-6));
    CHECK(s.sigma2 == doctest::Approx(1e-6));
    CHECK(s.used == 2);

    BoundReport neg = still;
    neg.psi_diff = -1;
    CHECK(fit_sigma({still, neg}).excluded == 1);

    // Only sigma2 can pay for this one: lhs = 1 with other() = 0.5 and no psi term.
    BoundReport r2;
    r2.S = 0.5;
    r2.lhs = 1.0;
    const SigmaFit f2 = fit_sigma({r2});
    CHECK(f2.sigma2 >= 2.0);
    CHECK(f2.sigma2 <= 2.0 * std::pow(10.0, 0.25 / 64) + 1e-12);

    BoundReport impossible;
    impossible.lhs = 1.0;
    CHECK_THROWS_AS(fit_sigma({impossible}), Infeasible);
}

TEST_CASE("cauchy rate probe")
{
    const auto& q = get_benchmark("quad1d");
    const Trajectory slow = run(q.f, vec({1.0}), StepSchedule::harmonic(0.25, 1), Policy::MinNorm, 10000);
    CHECK(cauchy_rate_probe(slow).slope <= -0.4);

    const Trajectory hit = run(q.f, vec({1.0}), StepSchedule::constant(0.5), Policy::MinNorm, 2000);
    CHECK(cauchy_rate_probe(hit).slope == -kInf);

    const auto& a = get_benchmark("abs1d");
    const Trajectory osc = run(a.f, vec({0.35}), StepSchedule::constant(0.1), Policy::MinNorm, 5000);
    CHECK(std::abs(cauchy_rate_probe(osc).slope) < 0.05);

    CHECK_THROWS_AS(cauchy_rate_probe(run(q.f, vec({1.0}), q.schedule, q.policy, 999)),
                    InsufficientDecades);
}
