#pragma once

#include "subgrad/engine.hpp"
#include "subgrad/piecewise.hpp"
#include "subgrad/strata.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sg {

// sgn(t) |t|^(1-theta)
template <typename Scalar>
Scalar psi(Scalar t, Scalar theta)
{
    using std::abs;
    using std::pow;
    if (t == Scalar(0))
        return Scalar(0);
    const Scalar m = pow(abs(t), Scalar(1) - theta);
    return t > Scalar(0) ? m : -m;
}

// |grad_M f(x)| >= eta |f(x) - f*|^theta on the sampled part of M near f*.
struct KLFit {
    int stratum = -1;
    double theta = 0.0;
    double eta = 0.0;
    double critical_value = 0.0;
    int samples_used = 0;
    int zero_gradient = 0; // samples with gap > 0 but vanishing gradient, left out
    int violations = 0;
};

KLFit estimate_kl(const PiecewiseFunction& f, const Stratification& S, int id, double f_star,
                  int samples = 10000, unsigned long long seed = 42, double epsilon = 1.0);

// Violations of a fitted inequality on a fresh sample.
int kl_violations(const PiecewiseFunction& f, const Stratification& S, const KLFit& fit,
                  int samples, unsigned long long seed, double epsilon = 1.0);

// Base constants of the local Lipschitz bounds; at step k they are scaled by
// alpha_k^(-omega_i) and floored at L.
struct LocalLipschitz {
    double Lf = 1.0;
    double LV = 1.0;
    double LP = 1.0;
};

struct StratumConstants {
    double c = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    double omega = 0.0;
    std::optional<LocalLipschitz> lip;
};

struct ProofConstants {
    double theta = 0.5;
    double beta = 0.25;
    double epsilon = 1.0;
    double alpha_bar = 1.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double c = 1.0; // g-sequence constant
    double L = 1.0;
    std::map<int, StratumConstants> strata;
};

ProofConstants proof_constants_from(const ExponentAssignment& ex, double c_stratum, double L,
                                    double epsilon);

// Ids i with d(x, M_i) <= c_i alpha^beta_i and d(x, M_j) > c_j alpha^gamma_j
// for every j in the frontier of i.
std::vector<int> neighborhood_membership(const Vector& x, double alpha, const ProofConstants& pc,
                                         const Stratification& S);

struct IndexTrace {
    int T = 0; // number of non-open strata
    std::vector<long> IC;
    std::map<long, int> G;
    std::vector<long> L;
    std::map<long, long> s;
    std::map<long, long> q;
    std::map<long, std::optional<long>> H; // nullopt encodes +infinity
    std::map<long, int> U;                 // only for l with finite H(l)
    int fallbacks = 0; // places where a defining set was empty and l itself was used
};

IndexTrace extract_indices(const Trajectory& tr, const ProofConstants& pc,
                           const Stratification& S);

struct ProjectedTrace {
    int stratum = -1;
    Matrix y;     // projections, n x (K+1)
    Vector d;     // |x_k - y_k|
    Vector fy;    // f(y_k)
    Vector g;     // g_K = 0, g_k = g_{k+1} + c alpha_k^(1+beta)
    Vector z;     // fy + g
    Vector rgrad; // |grad_M f(y_k)|
    Vector alpha; // alpha_0 .. alpha_{K-1}
};

ProjectedTrace projected_trace(const Trajectory& tr, const PiecewiseFunction& f,
                               const Stratification& S, int id, const ProofConstants& pc);

struct DescentReport {
    int violations = 0;
    int monotonicity_violations = 0;
    double worst_margin = kInf; // min over k of (z_k - z_{k+1}) - alpha_k |grad|^2 / 2
    int g_condition_violations = 0;
    bool g_condition_checked = false;
};

DescentReport check_descent(const ProjectedTrace& pt, const ProofConstants& pc);

struct LengthReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double psi_term = 0.0;
    double sum_term = 0.0;
    double tail_term = 0.0;
    bool holds = false;
};

LengthReport projected_length_check(const ProjectedTrace& pt, const KLFit& kl,
                                    const ProofConstants& pc);

struct BoundReport {
    double lhs = 0.0;
    double psi_diff = 0.0;   // psi(f0) - psi(fK)
    double a0_beta = 0.0;    // alpha_0^beta
    double S = 0.0;          // sum alpha_k^(1+beta)
    double S_pow = 0.0;      // S^(1-theta)
    double double_sum = 0.0; // sum_k alpha_k (sum_{j>=k} alpha_j^(1+beta))^theta
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rhs = 0.0;
    bool holds = false;
    bool hypotheses_ok = true;
    std::vector<std::string> flags;

    double other() const { return a0_beta + S + S_pow + double_sum; }
    double compose() const { return sigma1 * psi_diff + sigma2 * other(); }
};

// Suffix-sum evaluation of sum_k alpha_k (sum_{j>=k} alpha_j^(1+beta))^theta.
double double_sum(const std::vector<double>& alphas, double beta, double theta);

BoundReport diameter_bound_rhs(double f0, double fK, const std::vector<double>& alphas,
                               const ProofConstants& pc);

BoundReport check_diameter_bound(const Trajectory& tr, const ProofConstants& pc,
                                 double f_star = 0.0);

// Reports for the prefixes x_0..x_k, k = 1, 2, 4, ... < K, then the full run.
// The inequality holds at every horizon, so each prefix is a valid instance.
std::vector<BoundReport> prefix_bound_reports(const Trajectory& tr, const ProofConstants& pc,
                                              double f_star = 0.0);

struct SigmaFit {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    int used = 0;
    int excluded = 0; // reports with psi_diff < 0
};

SigmaFit fit_sigma(const std::vector<BoundReport>& reports);

struct RateProbe {
    double slope = 0.0; // -inf when the tail collapses to a point
    int points = 0;
};

RateProbe cauchy_rate_probe(const Trajectory& tr);

} // namespace sg
