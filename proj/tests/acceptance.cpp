// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "subgrad/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#ifndef SUBGRAD_CLI_PATH
#define SUBGRAD_CLI_PATH ""
#endif

using namespace sg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using clk = std::chrono::steady_clock;

double seconds_since(clk::time_point t0)
{
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Vector vec1(double a) { return Vector::Constant(1, a); }

// 1. Convergence on abs1d and maxlin2d, oscillation under a constant step.
Outcome convergence_dichotomy()
{
    const auto t0 = clk::now();
    std::ostringstream why;
    bool ok = true;
    for (const char* name : {"abs1d", "maxlin2d"}) {
        const auto& e = get_benchmark(name);
        const Trajectory tr = run(e.f, e.x0, StepSchedule::harmonic(1, 1), e.policy, 100000);
        const Verdict v = detect_convergence(tr, 1e-2);
        // Points closer to a kink than the residual motion count as on it.
        const double act = std::max(kActivityTol, 2.0 * e.f.lipschitz() * v.amplitude);
        const bool crit = critical_point_check(e.f, v.point, 1e-6, act);
        const bool good = v.kind == Verdict::Kind::ConvergedTo && v.amplitude < 1e-2 && crit;
        ok = ok && good;
        why << name << " amplitude=" << fmt("%.3g", v.amplitude) << (crit ? " critical" : " NOT critical")
            << "; ";
    }
    const auto& a = get_benchmark("abs1d");
    const Trajectory osc = run(a.f, a.x0, StepSchedule::constant(0.1), a.policy, 100000);
    const Verdict vo = detect_convergence(osc, 1e-2);
    const bool osc_ok = vo.kind == Verdict::Kind::Oscillating && std::abs(vo.amplitude - 0.1) <= 1e-9;
    ok = ok && osc_ok;
    const double secs = seconds_since(t0);
    ok = ok && secs < 5.0;
    why << "constant step " << to_string(vo.kind) << " amplitude=" << fmt("%.12g", vo.amplitude)
        << "; " << fmt("%.2f", secs) << " s";
    return {ok, why.str()};
}

// 2. Descent inequality and z-monotonicity with the shipped constants.
Outcome descent()
{
    std::ostringstream why;
    bool ok = true;
    for (auto [name, id] : {std::pair{"quad1d", 0}, std::pair{"ridge2d", 0}}) {
        const auto& e = get_benchmark(name);
        const Trajectory tr = run(e.f, e.x0, e.schedule, e.policy, 10000);
        const DescentReport r = check_descent(projected_trace(tr, e.f, e.strata, id, e.constants), e.constants);
        ok = ok && r.violations == 0 && r.monotonicity_violations == 0;
        why << name << " violations=" << r.violations << " monotonicity=" << r.monotonicity_violations
            << " g_condition=" << r.g_condition_violations << "; ";
    }
    return {ok, why.str()};
}

// 3. KL exponent fits.
Outcome kl_fits()
{
    std::ostringstream why;
    bool ok = true;
    auto timed = [&](const BenchmarkEntry& e, int id) {
        const auto t0 = clk::now();
        const KLFit f = estimate_kl(e.f, e.strata, id, e.f_star, 10000, 42, e.kl_epsilon);
        const double s = seconds_since(t0);
        ok = ok && s < 1.0;
        why << e.name << "[" << id << "] theta=" << fmt("%.4f", f.theta) << " eta=" << fmt("%.4f", f.eta)
            << " " << fmt("%.2f", s) << " s; ";
        return f;
    };
    const KLFit q = timed(get_benchmark("quad1d"), 0);
    ok = ok && std::abs(q.theta - 0.5) <= 0.02 && std::abs(q.eta - 2.0) <= 0.05;
    for (int id : {1, 2}) {
        const KLFit v = timed(get_benchmark("vee_pow"), id);
        ok = ok && std::abs(v.theta - 2.0 / 3.0) <= 0.02;
    }
    return {ok, why.str()};
}

// 4. Fitted sigmas generalize to held-out runs and to doubled horizons.
Outcome fitted_bound()
{
    const std::vector<std::string> bms = {"quad1d", "abs1d", "maxlin2d"};
    const std::vector<StepSchedule> sch = {StepSchedule::harmonic(0.5, 1), StepSchedule::power(0.5, 0.75, 1)};
    const long K = 1000;
    auto trajectories = [&](std::vector<unsigned long long> seeds, long steps) {
        std::vector<std::pair<const BenchmarkEntry*, Trajectory>> out;
        for (const auto& b : bms)
            for (const auto& s : sch)
                for (auto sd : seeds) {
                    const auto& e = get_benchmark(b);
                    out.emplace_back(&e, run(e.f, random_start(e, sd), s, Policy::RandomConvexCombination, steps, sd));
                }
        return out;
    };

    std::vector<BoundReport> train;
    for (const auto& [e, tr] : trajectories({1, 2}, K))
        for (auto& r : prefix_bound_reports(tr, e->constants, e->f_star))
            train.push_back(r);
    const SigmaFit sf = fit_sigma(train);

    auto held_out = [&](long steps) {
        int pass = 0, total = 0;
        for (const auto& [e, tr] : trajectories({101, 102}, steps)) {
            ProofConstants pc = e->constants;
            pc.sigma1 = sf.sigma1;
            pc.sigma2 = sf.sigma2;
            const BoundReport r = check_diameter_bound(tr, pc, e->f_star);
            pass += r.holds;
            ++total;
        }
        return std::pair{pass, total};
    };
    const auto [p1, n1] = held_out(K);
    const auto [p2, n2] = held_out(2 * K);
    std::ostringstream why;
    why << "sigma1=" << fmt("%.4g", sf.sigma1) << " sigma2=" << fmt("%.4g", sf.sigma2) << " from "
        << sf.used << " training reports; held-out " << p1 << "/" << n1 << ", doubled K " << p2 << "/" << n2;
    return {n1 == 12 && p1 == n1 && p2 == n2, why.str()};
}

// 5. Suffix-sum double sum against the quadratic formula.
Outcome double_sum_oracle()
{
    std::mt19937_64 rng(2025);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(1000);
        for (auto& x : a)
            x = 1e-3 + U(rng);
        std::sort(a.rbegin(), a.rend());
        const double be = 0.05 + 0.9 * U(rng), th = 0.9 * U(rng);
        double brute = 0.0;
        for (size_t k = 0; k < a.size(); ++k) {
            double inner = 0.0;
            for (size_t j = a.size(); j-- > k;)
                inner += std::pow(a[j], 1.0 + be);
            brute += a[k] * std::pow(inner, th);
        }
        worst = std::max(worst, std::abs(double_sum(a, be, th) - brute) / brute);
    }
    return {worst <= 1e-12, "worst relative error " + fmt("%.3g", worst) + " over 20 schedules"};
}

// 6. Index machinery invariants and the frozen crossing.
Outcome index_machinery()
{
    const auto& m = get_benchmark("maxlin2d");
    int good = 0, crossing = 0;
    std::string first_bad;
    for (unsigned long long seed = 1; seed <= 50; ++seed) {
        const Trajectory tr = run(m.f, random_start(m, seed), m.schedule, Policy::RandomConvexCombination, 500, seed);
        const IndexTrace it = extract_indices(tr, m.constants, m.strata);
        crossing += !it.L.empty();
        bool ok = true;
        for (size_t r = 0; r < it.L.size(); ++r) {
            const long l = it.L[r];
            ok = ok && std::binary_search(it.IC.begin(), it.IC.end(), l);
            ok = ok && l <= it.q.at(l) && it.q.at(l) <= it.s.at(l);
            if (r + 1 < it.L.size())
                ok = ok && it.L[r + 1] > it.q.at(l);
            if (it.U.count(l))
                ok = ok && it.U.at(l) <= it.T;
        }
        good += ok;
        if (!ok && first_bad.empty())
            first_bad = " first failing seed " + std::to_string(seed);
    }

    // Hand-checked twenty-step crossing of |x|.
    const auto& a = get_benchmark("abs1d");
    const std::vector<double> steps = {0.5, 0.3, 1.5, 0.1, 0.1, 0.1, 0.1, 0.8, 0.3, 0.2, 0.2,
                                       0.05, 0.03, 0.9, 0.05, 0.05, 0.3, 0.1, 0.05, 0.05, 0.05};
    const Trajectory tr = run(a.f, vec1(0.9), StepSchedule::from_table(steps), Policy::MinNorm, 20);
    const IndexTrace it = extract_indices(tr, a.constants, a.strata);
    const bool frozen = it.IC == std::vector<long>{1, 2, 7, 8, 9, 10, 11, 12, 13};

    std::ostringstream why;
    why << good << "/50 maxlin2d runs satisfy the invariants (" << crossing << " with crossings)"
        << first_bad << "; abs1d crossing I_C " << (frozen ? "matches" : "DIFFERS");
    return {good == 50 && crossing > 0 && frozen, why.str()};
}

// 7. Shrunken cell inclusions, negative control, quasiconvexity.
Outcome geometry()
{
    std::ostringstream why;
    bool ok = true;
    for (const char* name : {"interval", "graph", "triangle"}) {
        const NamedCell nc = get_cell(name);
        const InclusionReport r = verify_inclusions(nc.cell, shrink_cell(nc.cell, 0.1, nc.params), 10000);
        ok = ok && r.left_violations == 0 && r.right_violations == 0;
        why << name << " " << r.left_violations + r.right_violations << " violations; ";
    }
    const NamedCell tri = get_cell("triangle");
    ShrinkParams bad = tri.params;
    bad.margin_scale = 10.0;
    const InclusionReport neg = verify_inclusions(tri.cell, shrink_cell(tri.cell, 0.1, bad), 10000);
    ok = ok && neg.right_violations > 0;
    why << "corrupted margin " << neg.right_violations << " right violations; quasiconvexity";
    for (const char* name : {"interval", "square", "triangle"}) {
        const double C = quasiconvexity_estimate(get_cell(name).cell).C;
        ok = ok && C >= 1.0 && C <= 1.05;
        why << " " << name << "=" << fmt("%.4f", C);
    }
    return {ok, why.str()};
}

// 8. Exponent constraints re-evaluated one by one.
Outcome exponents()
{
    std::vector<Stratum> s;
    Vector o = Vector::Zero(2);
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    s.push_back(make_point(0, o));
    s.push_back(make_affine(1, o, e1, Vector::Zero(1), Vector::Constant(1, kInf), {}, {0}));
    s.push_back(make_region(2, 2, {Polynomial::variable(2, 1, -1.0)}, {1}));
    const Stratification S(cube(2, -1, 1), s);
    const ExponentAssignment ex = assign_exponents(S, 0.5);

    int checked = 0, failed = 0;
    auto need = [&](bool c) {
        ++checked;
        failed += !c;
    };
    double beta = kInf;
    for (const auto& M : S.strata()) {
        const auto& e = ex.per_stratum.at(M.id);
        need(ex.beta < e.beta);
        need(e.beta < e.gamma * (1.0 - ex.theta));
        need(e.gamma * (1.0 - ex.theta) < 1.0);
        double sup = 0.0;
        for (int j : S.frontier_closure(M.id)) {
            need(e.beta > ex.per_stratum.at(j).gamma);
            sup = std::max(sup, ex.per_stratum.at(j).gamma);
        }
        need(std::abs(e.omega - e.eta * sup) <= 1e-15);
        beta = std::min(beta, std::min(e.beta - e.omega, 2.0 - e.omega));
    }
    need(beta > 0.0);
    need(ex.beta > 0.0 && ex.beta <= beta);

    std::vector<Stratum> c4;
    for (int k = 0; k < 4; ++k) {
        if (k == 0)
            c4.push_back(make_point(0, Vector::Zero(4)));
        else
            c4.push_back(make_affine(k, Vector::Zero(4), Matrix::Identity(4, k), Vector::Constant(k, -kInf),
                                     Vector::Constant(k, kInf), {}, {k - 1}));
    }
    bool infeasible = false;
    try {
        assign_exponents(Stratification(cube(4, -1, 1), c4), 0.999);
    } catch (const InfeasibleExponents&) {
        infeasible = true;
    }
    std::ostringstream why;
    why << checked - failed << "/" << checked << " constraints hold at theta=0.5 (global beta="
        << fmt("%.6g", ex.beta) << "); depth 4 at theta=0.999 " << (infeasible ? "infeasible" : "ACCEPTED");
    return {failed == 0 && infeasible, why.str()};
}

// 9. Min-norm point against a simplex grid.
double simplex_grid_min(const Matrix& G, int steps)
{
    const double step = 1.0 / steps;
    double best = kInf;
    if (G.cols() == 1)
        return G.col(0).norm();
    if (G.cols() == 2) {
        for (int i = 0; i <= steps; ++i)
            best = std::min(best, (i * step * G.col(0) + (1 - i * step) * G.col(1)).norm());
        return best;
    }
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; i + j <= steps; ++j)
            best = std::min(best, (i * step * G.col(0) + j * step * G.col(1) + (1 - (i + j) * step) * G.col(2))
                                      .norm());
    return best;
}

Outcome min_norm_oracle()
{
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> M(1, 3), N(1, 3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst = 0.0;
    int over = 0;
    std::string note;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = M(rng), n = N(rng);
        Matrix G(n, m);
        for (auto& x : G.reshaped())
            x = U(rng);
        const MinNormResult r = min_norm_point(G);
        const double gap = std::abs(r.point.norm() - simplex_grid_min(G, 1000));
        worst = std::max(worst, gap);
        if (gap > 1e-3) {
            // Report whether the excess belongs to the grid: a ten times
            // finer grid should shrink it ten times if the solver is exact.
            ++over;
            note += "; set " + std::to_string(trial) + ": solver |p|=" + fmt("%.3g", r.point.norm()) +
                    ", grid 1e-4 gap " + fmt("%.3g", std::abs(r.point.norm() - simplex_grid_min(G, 10000)));
        }
    }
    return {worst <= 1e-3, "worst gap " + fmt("%.3g", worst) + " over 100 sets, " + std::to_string(over) +
                               " above 1e-3" + note};
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string without_timestamp(const std::string& text)
{
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("# timestamp=", 0) != 0)
            out += line + "\n";
    return out;
}

// 10. Byte-identical outputs across repeated runs and worker counts.
Outcome determinism()
{
    const std::string cli = SUBGRAD_CLI_PATH;
    if (cli.empty() || !fs::exists(cli))
        return {false, "CLI binary not found at '" + cli + "'"};
    const fs::path root = fs::temp_directory_path() / ("subgrad_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    auto sh = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (root / "log.txt").string() + "\" 2>&1";
        return std::system(cmd.c_str());
    };
    std::ostringstream why;
    bool ok = true;

    const std::string run_args = "run -b maxlin2d -p random_convex -K 3000 --seed 7 --x0 random -o ";
    sh(run_args + "\"" + (root / "a").string() + "\"");
    sh(run_args + "\"" + (root / "b").string() + "\"");
    const std::string ta = read_file(root / "a" / "trace.csv"), tb = read_file(root / "b" / "trace.csv");
    const bool same_run = !ta.empty() && without_timestamp(ta) == without_timestamp(tb);
    ok = ok && same_run;
    why << "repeat run " << (same_run ? "identical" : "DIFFERS");

    const std::string grid = "sweep --benchmarks abs1d,maxlin2d,nonconvex_ring --schedules "
                             "\"harmonic:1,1;constant:0.05\" --policies min_norm,random_vertex "
                             "--seeds 1,2,3 -K 2000 --x0 random --traces ";
    sh(grid + "-j 1 -o \"" + (root / "j1").string() + "\"");
    sh(grid + "-j 8 -o \"" + (root / "j8").string() + "\"");
    int files = 0, diffs = 0;
    for (const auto& entry : fs::directory_iterator(root / "j1" / "traces")) {
        ++files;
        const fs::path other = root / "j8" / "traces" / entry.path().filename();
        if (!fs::exists(other) ||
            without_timestamp(read_file(entry.path())) != without_timestamp(read_file(other)))
            ++diffs;
    }
    const bool same_sweep = without_timestamp(read_file(root / "j1" / "sweep.csv")) ==
                            without_timestamp(read_file(root / "j8" / "sweep.csv"));
    ok = ok && files == 36 && diffs == 0 && same_sweep;
    why << "; jobs 1 vs 8: " << files << " traces, " << diffs << " differ, sweep.csv "
        << (same_sweep ? "identical" : "DIFFERS");
    fs::remove_all(root);
    return {ok, why.str()};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"convergence dichotomy", convergence_dichotomy},
        {"descent inequality", descent},
        {"KL fits", kl_fits},
        {"diameter bound with fitted sigmas", fitted_bound},
        {"double-sum oracle", double_sum_oracle},
        {"index machinery", index_machinery},
        {"shrunken cell geometry", geometry},
        {"exponent assignment", exponents},
        {"min-norm oracle", min_norm_oracle},
        {"determinism", determinism},
    };
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
