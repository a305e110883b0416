#include "subgrad/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace sg {

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

Polynomial mono(int n, Exponents e, double c)
{
    Polynomial p(n);
    p.add_term(e, c);
    return p;
}

Polynomial lin(std::initializer_list<double> a) { return Polynomial::affine(vec(a), 0.0); }

Matrix col(std::initializer_list<double> v) { return vec(v); }

// Stratification of the real line at the origin.
Stratification line_at_origin(double lo, double hi)
{
    std::vector<Stratum> s;
    s.push_back(make_point(0, vec({0.0})));
    s.push_back(make_affine(1, vec({0.0}), col({1.0}), vec({-kInf}), vec({0.0}), {}, {0}));
    s.push_back(make_affine(2, vec({0.0}), col({1.0}), vec({0.0}), vec({kInf}), {}, {0}));
    return Stratification(cube(1, lo, hi), std::move(s));
}

void finish(BenchmarkEntry& e)
{
    e.theta = bound_theta(e.strata, e.known_theta);
    const auto ex = assign_exponents(e.strata, e.theta);
    const double L = e.f.lipschitz();
    e.constants = proof_constants_from(ex, 0.5, L, e.epsilon);
    e.constants.alpha_bar = 1.0;
    // Large enough that the g-sequence absorbs the quadratic step error on
    // the open strata.
    e.constants.c = std::pow(L, 4) * L;
    for (auto& [id, sc] : e.constants.strata)
        sc.lip = LocalLipschitz{L, L, L};
}

BenchmarkEntry abs1d()
{
    BenchmarkEntry e;
    e.name = "abs1d";
    e.description = "|x| on [-2, 2] as max(x, -x)";
    e.f = PiecewiseFunction("abs1d", {lin({1.0}), lin({-1.0})},
                            expr::max({expr::leaf(0), expr::leaf(1)}), cube(1, -2, 2), 1.0);
    e.strata = line_at_origin(-2, 2);
    e.critical_points = {vec({0.0})};
    e.known_theta = {{1, 0.0}, {2, 0.0}};
    e.epsilon = 2.0;
    e.x0 = vec({0.35});
    e.start_box = cube(1, -1, 1);
    e.schedule = StepSchedule::harmonic(1.0, 1.0);
    finish(e);
    return e;
}

BenchmarkEntry quad1d()
{
    BenchmarkEntry e;
    e.name = "quad1d";
    e.description = "x^2 on [-2, 2], a single smooth piece";
    e.f = PiecewiseFunction("quad1d", {mono(1, {2}, 1.0)}, expr::leaf(0), cube(1, -2, 2), 4.0);
    std::vector<Stratum> s;
    s.push_back(make_affine(0, vec({0.0}), col({1.0}), vec({-kInf}), vec({kInf})));
    e.strata = Stratification(cube(1, -2, 2), std::move(s));
    e.critical_points = {vec({0.0})};
    e.known_theta = {{0, 0.5}};
    e.epsilon = 4.0;
    e.x0 = vec({1.0});
    e.start_box = cube(1, -1, 1);
    e.schedule = StepSchedule::harmonic(0.25, 1.0);
    finish(e);
    return e;
}

BenchmarkEntry maxlin2d()
{
    // max(x1 + x2, -x1 + x2, -2 x2): three ridges meeting at the origin.
    BenchmarkEntry e;
    e.name = "maxlin2d";
    e.description = "max of three affine pieces on [-2, 2]^2 with a triple point at 0";
    const Polynomial p1 = lin({1.0, 1.0}), p2 = lin({-1.0, 1.0}), p3 = lin({0.0, -2.0});
    e.f = PiecewiseFunction("maxlin2d", {p1, p2, p3},
                            expr::max({expr::leaf(0), expr::leaf(1), expr::leaf(2)}),
                            cube(2, -2, 2), 2.0);
    const double r10 = std::sqrt(10.0);
    std::vector<Stratum> s;
    s.push_back(make_point(0, vec({0.0, 0.0})));
    s.push_back(make_affine(1, vec({0, 0}), col({0.0, 1.0}), vec({0.0}), vec({kInf}), {}, {0}));
    s.push_back(make_affine(2, vec({0, 0}), col({3.0 / r10, -1.0 / r10}), vec({0.0}), vec({kInf}),
                            {}, {0}));
    s.push_back(make_affine(3, vec({0, 0}), col({-3.0 / r10, -1.0 / r10}), vec({0.0}),
                            vec({kInf}), {}, {0}));
    s.push_back(make_region(4, 2, {p2 - p1, p3 - p1}, {0, 1, 2}));
    s.push_back(make_region(5, 2, {p1 - p2, p3 - p2}, {0, 1, 3}));
    s.push_back(make_region(6, 2, {p1 - p3, p2 - p3}, {0, 2, 3}));
    e.strata = Stratification(cube(2, -2, 2), std::move(s));
    e.critical_points = {vec({0.0, 0.0})};
    e.known_theta = {{1, 0.0}, {2, 0.0}, {3, 0.0}, {4, 0.0}, {5, 0.0}, {6, 0.0}};
    e.epsilon = 8.0;
    e.x0 = vec({0.7, 0.4});
    e.start_box = cube(2, -1, 1);
    e.schedule = StepSchedule::harmonic(1.0, 1.0);
    finish(e);
    return e;
}

BenchmarkEntry ridge2d()
{
    BenchmarkEntry e;
    e.name = "ridge2d";
    e.description = "|x1| + x2^2 on [-2, 2]^2";
    e.f = PiecewiseFunction(
        "ridge2d", {lin({1.0, 0.0}), lin({-1.0, 0.0}), mono(2, {0, 2}, 1.0)},
        expr::sum({expr::max({expr::leaf(0), expr::leaf(1)}), expr::leaf(2)}), cube(2, -2, 2),
        std::sqrt(17.0));
    std::vector<Stratum> s;
    s.push_back(make_affine(0, vec({0, 0}), col({0.0, 1.0}), vec({-kInf}), vec({kInf})));
    Matrix I = Matrix::Identity(2, 2);
    s.push_back(make_affine(1, vec({0, 0}), I, vec({0.0, -kInf}), vec({kInf, kInf}), {}, {0}));
    s.push_back(make_affine(2, vec({0, 0}), I, vec({-kInf, -kInf}), vec({0.0, kInf}), {}, {0}));
    e.strata = Stratification(cube(2, -2, 2), std::move(s));
    e.critical_points = {vec({0.0, 0.0})};
    e.known_theta = {{0, 0.5}, {1, 0.0}, {2, 0.0}};
    e.epsilon = 6.0;
    e.x0 = vec({0.6, 0.8});
    e.start_box = cube(2, -1, 1);
    e.schedule = StepSchedule::harmonic(0.25, 1.0);
    finish(e);
    return e;
}

BenchmarkEntry vee_pow()
{
    BenchmarkEntry e;
    e.name = "vee_pow";
    e.description = "|x|^3 on [-1.5, 1.5] as max(x^3, -x^3)";
    e.f = PiecewiseFunction("vee_pow", {mono(1, {3}, 1.0), mono(1, {3}, -1.0)},
                            expr::max({expr::leaf(0), expr::leaf(1)}), cube(1, -1.5, 1.5), 6.75);
    e.strata = line_at_origin(-1.5, 1.5);
    e.critical_points = {vec({0.0})};
    e.known_theta = {{1, 2.0 / 3.0}, {2, 2.0 / 3.0}};
    e.epsilon = 3.375;
    e.x0 = vec({0.8});
    e.start_box = cube(1, -1, 1);
    e.schedule = StepSchedule::harmonic(0.25, 1.0);
    finish(e);
    return e;
}

BenchmarkEntry nonconvex_ring()
{
    BenchmarkEntry e;
    e.name = "nonconvex_ring";
    e.description = "| |x|^2 - 1 | on [-2, 2]^2: minimum on the unit circle, local max at 0";
    Polynomial r2 = mono(2, {2, 0}, 1.0) + mono(2, {0, 2}, 1.0) + Polynomial::constant(2, -1.0);
    e.f = PiecewiseFunction("nonconvex_ring", {r2, r2 * -1.0},
                            expr::max({expr::leaf(0), expr::leaf(1)}), cube(2, -2, 2),
                            4.0 * std::sqrt(2.0));
    std::vector<Stratum> s;
    s.push_back(make_sphere(0, vec({0.0, 0.0}), 1.0));
    s.push_back(make_region(1, 2, {r2}, {0}));
    s.push_back(make_region(2, 2, {r2 * -1.0}, {0}));
    e.strata = Stratification(cube(2, -2, 2), std::move(s));
    e.critical_points = {vec({1.0, 0.0}), vec({0.0, -1.0}), vec({0.0, 0.0})};
    e.known_theta = {{1, 0.0}, {2, 0.0}};
    e.epsilon = 7.0;
    // |grad| = 2 sqrt(1 + gap) off the circle; the exponent is only visible near the level.
    e.kl_epsilon = 0.05;
    e.x0 = vec({1.3, 0.4});
    e.start_box = cube(2, -1.5, 1.5);
    e.schedule = StepSchedule::harmonic(0.1, 1.0);
    finish(e);
    return e;
}

const std::map<std::string, BenchmarkEntry>& registry()
{
    static const std::map<std::string, BenchmarkEntry> reg = [] {
        std::map<std::string, BenchmarkEntry> m;
        for (auto e : {abs1d(), quad1d(), maxlin2d(), ridge2d(), vee_pow(), nonconvex_ring()})
            m.emplace(e.name, std::move(e));
        return m;
    }();
    return reg;
}

} // namespace

double bound_theta(const Stratification& S, const std::map<int, double>& thetas)
{
    double best = -1.0;
    for (const auto& [id, th] : thetas)
        if (!S.is_open(id))
            best = std::max(best, th);
    if (best < 0.0)
        for (const auto& [id, th] : thetas)
            best = std::max(best, th);
    return std::clamp(best, 0.01, 1.0 - 1e-9);
}

std::vector<std::string> list_benchmarks()
{
    std::vector<std::string> out;
    for (const auto& [name, e] : registry())
        out.push_back(name);
    return out;
}

const BenchmarkEntry& get_benchmark(const std::string& name)
{
    const auto& reg = registry();
    auto it = reg.find(name);
    if (it == reg.end()) {
        std::string known;
        for (const auto& [n, e] : reg)
            known += (known.empty() ? "" : ", ") + n;
        throw UnknownBenchmark("unknown benchmark '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

Vector random_start(const BenchmarkEntry& e, unsigned long long seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Vector x(e.start_box.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = e.start_box.lower[i] + (e.start_box.upper[i] - e.start_box.lower[i]) * U(rng);
    return x;
}

std::vector<std::string> list_cells()
{
    return {"graph", "horseshoe", "interval", "square", "triangle"};
}

NamedCell get_cell(const std::string& name)
{
    const LRegularCell unit = cells::interval(0.0, 1.0);
    if (name == "interval")
        return {unit, {}};
    if (name == "graph")
        return {cells::graph(unit, mono(1, {2}, 1.0), 2.0), {}};
    if (name == "triangle")
        return {cells::band(unit, Polynomial::constant(1, 0.0), lin({1.0}), 1.0), {1.0, 1.0}};
    if (name == "square")
        return {cells::band(unit, Polynomial::constant(1, 0.0), Polynomial::constant(1, 1.0), 1.0),
                {1.0, 1.0}};
    if (name == "horseshoe") {
        const Polynomial lo = mono(1, {2}, 4.0);
        return {cells::band(cells::interval(-1.0, 1.0), lo, lo + Polynomial::constant(1, 0.3), 8.0),
                {0.3, 1.0}};
    }
    throw std::invalid_argument("unknown cell '" + name + "'");
}

} // namespace sg
