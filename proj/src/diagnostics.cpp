#include "subgrad/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace sg {

namespace {

struct KLSample {
    double gap;
    double grad;
};

std::vector<KLSample> kl_samples(const PiecewiseFunction& f, const Stratification& S, int id,
                                 double f_star, int samples, unsigned long long seed,
                                 double epsilon, int& zero_grad, int& at_level)
{
    std::mt19937_64 rng(seed);
    const Stratum& M = S.at(id);
    std::vector<KLSample> out;
    zero_grad = 0;
    at_level = 0;
    const long max_attempts = 50L * samples + 1000;
    for (long att = 0; att < max_attempts && static_cast<int>(out.size()) + zero_grad + at_level < samples;
         ++att) {
        const Vector x = sample(M, S.box(), rng);
        const double gap = std::abs(evaluate(f, x) - f_star);
        if (gap > epsilon)
            continue;
        if (gap == 0.0) {
            ++at_level;
            continue;
        }
        const double gn = riemannian_gradient(f, M, x).norm();
        if (gn == 0.0) {
            ++zero_grad;
            continue;
        }
        out.push_back({gap, gn});
    }
    return out;
}

} // namespace

KLFit estimate_kl(const PiecewiseFunction& f, const Stratification& S, int id, double f_star,
                  int samples, unsigned long long seed, double epsilon)
{
    int zero_grad = 0, at_level = 0;
    auto pts = kl_samples(f, S, id, f_star, samples, seed, epsilon, zero_grad, at_level);
    if (pts.size() < 2)
        throw DegenerateSamples("stratum " + std::to_string(id) +
                                ": sampled values coincide with the critical value (" +
                                std::to_string(at_level) + " at level, " +
                                std::to_string(pts.size()) + " usable)");

    // Lower convex hull of (log gap, log grad); take the edge over the mean
    // abscissa, preferring the smaller slope at a vertex.
    std::vector<std::pair<double, double>> uw;
    uw.reserve(pts.size());
    double mean_u = 0.0;
    for (const auto& p : pts) {
        uw.emplace_back(std::log(p.gap), std::log(p.grad));
        mean_u += uw.back().first;
    }
    mean_u /= static_cast<double>(uw.size());
    std::sort(uw.begin(), uw.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : uw) {
        while (hull.size() >= 2) {
            const auto& o = hull[hull.size() - 2];
            const auto& a = hull.back();
            const double cr = (a.first - o.first) * (p.second - o.second) -
                              (a.second - o.second) * (p.first - o.first);
            if (cr <= 0.0)
                hull.pop_back();
            else
                break;
        }
        if (!hull.empty() && hull.back().first == p.first)
            continue; // same abscissa: the lower point is already kept
        hull.push_back(p);
    }
    double theta = 0.0;
    if (hull.size() >= 2) {
        size_t e = 0;
        while (e + 2 < hull.size() && hull[e + 1].first < mean_u)
            ++e;
        theta = (hull[e + 1].second - hull[e].second) / (hull[e + 1].first - hull[e].first);
    }
    theta = std::clamp(theta, 0.0, 1.0 - 1e-9);

    KLFit fit;
    fit.stratum = id;
    fit.theta = theta;
    fit.critical_value = f_star;
    fit.samples_used = static_cast<int>(pts.size());
    fit.zero_gradient = zero_grad;
    fit.eta = kInf;
    for (const auto& p : pts)
        fit.eta = std::min(fit.eta, p.grad / std::pow(p.gap, theta));
    for (const auto& p : pts)
        if (p.grad < fit.eta * std::pow(p.gap, theta) * (1.0 - 1e-12))
            ++fit.violations;
    return fit;
}

int kl_violations(const PiecewiseFunction& f, const Stratification& S, const KLFit& fit,
                  int samples, unsigned long long seed, double epsilon)
{
    int zero_grad = 0, at_level = 0;
    auto pts = kl_samples(f, S, fit.stratum, fit.critical_value, samples, seed, epsilon,
                          zero_grad, at_level);
    int v = zero_grad;
    for (const auto& p : pts)
        if (p.grad < fit.eta * std::pow(p.gap, fit.theta) * (1.0 - 1e-12))
            ++v;
    return v;
}

ProofConstants proof_constants_from(const ExponentAssignment& ex, double c_stratum, double L,
                                    double epsilon)
{
    ProofConstants pc;
    pc.theta = ex.theta;
    pc.beta = ex.beta;
    pc.epsilon = epsilon;
    pc.L = L;
    for (const auto& [id, e] : ex.per_stratum) {
        StratumConstants sc;
        sc.c = c_stratum;
        sc.beta = e.beta;
        sc.gamma = e.gamma;
        sc.omega = e.omega;
        pc.strata[id] = sc;
    }
    return pc;
}

namespace {

const StratumConstants& consts(const ProofConstants& pc, int id)
{
    auto it = pc.strata.find(id);
    if (it == pc.strata.end())
        throw ConstantsMissing("no proof constants for stratum " + std::to_string(id));
    return it->second;
}

bool in_neighborhood(const Vector& x, double alpha, int i, const ProofConstants& pc,
                     const Stratification& S)
{
    const auto& ci = consts(pc, i);
    if (distance(S, i, x) > ci.c * std::pow(alpha, ci.beta))
        return false;
    for (int j : S.frontier_closure(i)) {
        const auto& cj = consts(pc, j);
        if (distance(S, j, x) <= cj.c * std::pow(alpha, cj.gamma))
            return false;
    }
    return true;
}

} // namespace

std::vector<int> neighborhood_membership(const Vector& x, double alpha, const ProofConstants& pc,
                                         const Stratification& S)
{
    std::vector<int> out;
    for (const auto& M : S.strata())
        if (in_neighborhood(x, alpha, M.id, pc, S))
            out.push_back(M.id);
    return out;
}

IndexTrace extract_indices(const Trajectory& tr, const ProofConstants& pc, const Stratification& S)
{
    IndexTrace out;
    const long K = tr.K();
    const auto strata = S.non_open_ids();
    out.T = static_cast<int>(strata.size());
    auto alpha = [&](long k) { return k < K ? tr.steps[k] : tr.next_step; };
    auto near2 = [&](long k, int i) {
        const auto& c = consts(pc, i);
        return distance(S, i, tr.x(k)) <= 2.0 * c.c * std::pow(alpha(k), c.gamma);
    };

    for (long k = 0; k < K; ++k) {
        const Vector a = tr.x(k), b = tr.x(k + 1);
        for (int i : strata) {
            const auto& c = consts(pc, i);
            if (segment_distance(S, i, a, b) <= c.c * std::pow(alpha(k), c.gamma)) {
                out.IC.push_back(k);
                break;
            }
        }
    }

    auto G_of = [&](long k) {
        int best = -1;
        for (int i : strata)
            if (near2(k, i) && (best < 0 || S.at(i).dim < S.at(best).dim))
                best = i;
        if (best >= 0)
            return best;
        ++out.fallbacks;
        double br = kInf;
        for (int i : strata) {
            const auto& c = consts(pc, i);
            const double r = distance(S, i, tr.x(k)) / (2.0 * c.c * std::pow(alpha(k), c.gamma));
            if (r < br) {
                br = r;
                best = i;
            }
        }
        return best;
    };
    for (long k : out.IC)
        out.G[k] = G_of(k);

    if (out.IC.empty())
        return out;
    long l = out.IC.front();
    for (;;) {
        out.L.push_back(l);
        const int i = out.G[l];
        long s = l;
        if (!in_neighborhood(tr.x(l), alpha(l), i, pc, S))
            ++out.fallbacks;
        else
            while (s + 1 <= K && in_neighborhood(tr.x(s + 1), alpha(s + 1), i, pc, S))
                ++s;
        long q = -1;
        for (long k = s; k >= l; --k)
            if (near2(k, i)) {
                q = k;
                break;
            }
        if (q < 0) {
            ++out.fallbacks;
            q = l;
        }
        out.s[l] = s;
        out.q[l] = q;
        auto it = std::upper_bound(out.IC.begin(), out.IC.end(), q);
        if (it == out.IC.end())
            break;
        l = *it;
    }

    for (long lm : out.L) {
        auto it = std::lower_bound(out.L.begin(), out.L.end(), out.s[lm]);
        if (it == out.L.end()) {
            out.H[lm] = std::nullopt;
            continue;
        }
        out.H[lm] = *it;
        std::set<int> seen;
        for (long k : out.IC)
            if (k > out.q[lm] && k < *it)
                seen.insert(out.G[k]);
        out.U[lm] = static_cast<int>(seen.size()) + 1;
    }
    return out;
}

ProjectedTrace projected_trace(const Trajectory& tr, const PiecewiseFunction& f,
                               const Stratification& S, int id, const ProofConstants& pc)
{
    const long K = tr.K();
    ProjectedTrace pt;
    pt.stratum = id;
    pt.y.resize(tr.dim(), K + 1);
    pt.d.resize(K + 1);
    pt.fy.resize(K + 1);
    pt.g.resize(K + 1);
    pt.z.resize(K + 1);
    pt.rgrad.resize(K + 1);
    pt.alpha = tr.steps;
    const Stratum& M = S.at(id);
    for (long k = 0; k <= K; ++k) {
        const Vector y = project(S, id, tr.x(k));
        pt.y.col(k) = y;
        pt.d[k] = (tr.x(k) - y).norm();
        pt.fy[k] = evaluate(f, y);
        pt.rgrad[k] = riemannian_gradient(f, M, y).norm();
    }
    pt.g[K] = 0.0;
    for (long k = K - 1; k >= 0; --k)
        pt.g[k] = pt.g[k + 1] + pc.c * std::pow(tr.steps[k], 1.0 + pc.beta);
    pt.z = pt.fy + pt.g;
    return pt;
}

namespace {

struct StepLipschitz {
    double Lf, LV, LP;
};

StepLipschitz step_lipschitz(const ProofConstants& pc, int id, double alpha)
{
    const auto& c = consts(pc, id);
    if (!c.lip)
        throw ConstantsMissing("no local Lipschitz constants for stratum " + std::to_string(id));
    const double s = std::pow(alpha, -c.omega);
    return {std::max(pc.L, c.lip->Lf * s), std::max(pc.L, c.lip->LV * s),
            std::max(pc.L, c.lip->LP * s)};
}

} // namespace

DescentReport check_descent(const ProjectedTrace& pt, const ProofConstants& pc)
{
    DescentReport rep;
    const long K = pt.alpha.size();
    const auto& c = consts(pc, pt.stratum);
    rep.g_condition_checked = c.lip.has_value();
    const double L = pc.L;
    for (long k = 0; k < K; ++k) {
        const double a = pt.alpha[k];
        const double dz = pt.z[k] - pt.z[k + 1];
        const double need = 0.5 * a * pt.rgrad[k] * pt.rgrad[k];
        const double slack = 1e-12 * (std::abs(pt.z[k]) + std::abs(pt.z[k + 1]));
        rep.worst_margin = std::min(rep.worst_margin, dz - need);
        if (need > dz + slack)
            ++rep.violations;
        if (pt.z[k + 1] > pt.z[k] + slack)
            ++rep.monotonicity_violations;
        if (rep.g_condition_checked) {
            const auto sl = step_lipschitz(pc, pt.stratum, a);
            const double dg = pc.c * std::pow(a, 1.0 + pc.beta);
            const double d = pt.d[k];
            const double req = a * sl.LV * sl.LV * d * d / 2.0 + L * L * a * sl.LP * d +
                               std::pow(L, 4) * a * a * (sl.Lf + sl.LP) / 2.0;
            if (dg < req)
                ++rep.g_condition_violations;
        }
    }
    return rep;
}

LengthReport projected_length_check(const ProjectedTrace& pt, const KLFit& kl,
                                    const ProofConstants& pc)
{
    LengthReport rep;
    const long K = pt.alpha.size();
    const double L = pc.L;
    const double th = kl.theta;
    if (!(kl.eta > 0.0))
        throw std::invalid_argument("KL fit has a non-positive eta");
    auto Psi = [&](double t) { return psi(t, th) / ((1.0 - th) * kl.eta); };

    for (long k = 0; k < K; ++k)
        rep.lhs += (pt.y.col(k + 1) - pt.y.col(k)).norm();

    rep.psi_term = 2.0 * L * (Psi(pt.z[0] - kl.critical_value) - Psi(pt.z[K] - kl.critical_value));
    double amax = 0.0;
    for (long k = 0; k < K; ++k) {
        const double a = pt.alpha[k];
        const auto sl = step_lipschitz(pc, pt.stratum, a);
        rep.sum_term += L * L * L * sl.Lf * a * a + L * a * sl.LV * pt.d[k] +
                        L * a * kl.eta * std::pow(pt.g[k], th);
        amax = std::max(amax, a);
    }
    rep.tail_term = L * L * amax;
    rep.rhs = rep.psi_term + rep.sum_term + rep.tail_term;
    rep.holds = rep.lhs <= rep.rhs;
    return rep;
}

double double_sum(const std::vector<double>& alphas, double beta, double theta)
{
    double suffix = 0.0, total = 0.0;
    for (size_t k = alphas.size(); k-- > 0;) {
        suffix += std::pow(alphas[k], 1.0 + beta);
        total += alphas[k] * std::pow(suffix, theta);
    }
    return total;
}

namespace {

BoundReport bound_components(double f0, double fK, const std::vector<double>& alphas,
                             const ProofConstants& pc)
{
    BoundReport r;
    const double th = pc.theta, be = pc.beta;
    r.sigma1 = pc.sigma1;
    r.sigma2 = pc.sigma2;
    r.psi_diff = psi(f0, th) - psi(fK, th);
    r.a0_beta = alphas.empty() ? 0.0 : std::pow(alphas[0], be);
    for (double a : alphas)
        r.S += std::pow(a, 1.0 + be);
    r.S_pow = std::pow(r.S, 1.0 - th);
    r.double_sum = double_sum(alphas, be, th);
    r.rhs = r.compose();
    return r;
}

} // namespace

BoundReport diameter_bound_rhs(double f0, double fK, const std::vector<double>& alphas,
                               const ProofConstants& pc)
{
    for (double a : alphas)
        if (!(a > 0.0))
            throw InvalidSchedule("step sizes must be positive");
    for (size_t k = 0; k + 1 < alphas.size(); ++k)
        if (alphas[k + 1] > alphas[k])
            throw NonDecreasingSchedule("step " + std::to_string(k + 1) + " exceeds step " +
                                        std::to_string(k));
    return bound_components(f0, fK, alphas, pc);
}

BoundReport check_diameter_bound(const Trajectory& tr, const ProofConstants& pc, double f_star)
{
    const long K = tr.K();
    std::vector<double> alphas(tr.steps.data(), tr.steps.data() + K);
    BoundReport r = bound_components(tr.values[0] - f_star, tr.values[K] - f_star, alphas, pc);
    r.lhs = diameter(tr, 0, K);
    for (size_t k = 0; k + 1 < alphas.size(); ++k)
        if (alphas[k + 1] > alphas[k]) {
            r.hypotheses_ok = false;
            r.flags.push_back("steps not nonincreasing");
            break;
        }
    if (!alphas.empty() && alphas[0] > pc.alpha_bar) {
        r.hypotheses_ok = false;
        r.flags.push_back("first step above alpha_bar");
    }
    for (long k = 0; k <= K; ++k)
        if (std::abs(tr.values[k] - f_star) > pc.epsilon) {
            r.hypotheses_ok = false;
            r.flags.push_back("iterate outside the epsilon level window");
            break;
        }
    if (tr.truncated) {
        r.hypotheses_ok = false;
        r.flags.push_back("trajectory truncated");
    }
    r.holds = r.lhs <= r.rhs;
    return r;
}

std::vector<BoundReport> prefix_bound_reports(const Trajectory& tr, const ProofConstants& pc,
                                              double f_star)
{
    std::vector<BoundReport> out;
    for (long k = 1; k < tr.K(); k *= 2)
        out.push_back(check_diameter_bound(prefix(tr, k), pc, f_star));
    if (tr.K() > 0)
        out.push_back(check_diameter_bound(tr, pc, f_star));
    return out;
}

SigmaFit fit_sigma(const std::vector<BoundReport>& reports)
{
    SigmaFit out;
    std::vector<const BoundReport*> use;
    for (const auto& r : reports) {
        if (r.psi_diff < 0.0)
            ++out.excluded;
        else
            use.push_back(&r);
    }
    out.used = static_cast<int>(use.size());
    auto ok = [&](double e1, double e2) {
        const double s1 = std::pow(10.0, e1), s2 = std::pow(10.0, e2);
        for (const auto* r : use)
            if (s1 * r->psi_diff + s2 * r->other() < r->lhs)
                return false;
        return true;
    };
    const double lo = -6.0, hi = 6.0;
    double step = 0.25;
    double b1 = 0, b2 = 0, bsum = kInf;
    bool found = false;
    for (double e1 = lo; e1 <= hi + 1e-12; e1 += step)
        for (double e2 = lo; e2 <= hi + 1e-12; e2 += step) {
            if (!ok(e1, e2))
                continue;
            const double sum = std::pow(10.0, e1) + std::pow(10.0, e2);
            if (sum < bsum) {
                bsum = sum;
                b1 = e1;
                b2 = e2;
                found = true;
            }
            break; // larger sigma2 only increases the sum
        }
    if (!found) {
        size_t worst = 0;
        double wr = -1.0;
        for (size_t i = 0; i < use.size(); ++i) {
            const double denom = use[i]->psi_diff + use[i]->other();
            const double r = denom > 0 ? use[i]->lhs / denom : kInf;
            if (r > wr) {
                wr = r;
                worst = i;
            }
        }
        throw Infeasible("no sigma pair on the grid satisfies every report; tightest is report " +
                         std::to_string(worst) + " with lhs/rhs-components ratio " +
                         std::to_string(wr));
    }
    for (int refine = 0; refine < 2; ++refine) {
        const double fine = step / 8.0;
        const double c1 = b1, c2 = b2;
        for (int i = -8; i <= 8; ++i)
            for (int j = -8; j <= 8; ++j) {
                const double e1 = std::clamp(c1 + i * fine, lo, hi);
                const double e2 = std::clamp(c2 + j * fine, lo, hi);
                if (!ok(e1, e2))
                    continue;
                const double sum = std::pow(10.0, e1) + std::pow(10.0, e2);
                if (sum < bsum || (sum == bsum && e1 < b1)) {
                    bsum = sum;
                    b1 = e1;
                    b2 = e2;
                }
            }
        step = fine;
    }
    out.sigma1 = std::pow(10.0, b1);
    out.sigma2 = std::pow(10.0, b2);
    return out;
}

RateProbe cauchy_rate_probe(const Trajectory& tr)
{
    const long K = tr.K();
    if (K < 1000)
        throw InsufficientDecades("need K >= 1000 for two decades, got " + std::to_string(K));
    const Vector d = tail_diameters(tr);
    std::vector<long> ks;
    const double l0 = std::log10(K / 100.0), l1 = std::log10(static_cast<double>(K - 1));
    for (int i = 0; i <= 40; ++i) {
        const long k = std::lround(std::pow(10.0, l0 + (l1 - l0) * i / 40.0));
        if (ks.empty() || k != ks.back())
            ks.push_back(k);
    }
    RateProbe rp;
    std::vector<double> X, Y;
    for (long k : ks) {
        if (d[k] == 0.0) {
            rp.slope = -kInf;
            rp.points = static_cast<int>(X.size());
            return rp;
        }
        X.push_back(std::log(static_cast<double>(k)));
        Y.push_back(std::log(d[k]));
    }
    const double mx = std::accumulate(X.begin(), X.end(), 0.0) / X.size();
    const double my = std::accumulate(Y.begin(), Y.end(), 0.0) / Y.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < X.size(); ++i) {
        sxy += (X[i] - mx) * (Y[i] - my);
        sxx += (X[i] - mx) * (X[i] - mx);
    }
    rp.slope = sxx > 0 ? sxy / sxx : 0.0;
    rp.points = static_cast<int>(X.size());
    return rp;
}

} // namespace sg
