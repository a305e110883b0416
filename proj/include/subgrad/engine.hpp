#pragma once

#include "subgrad/piecewise.hpp"
#include "subgrad/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sg {

enum class ScheduleKind { Constant, Harmonic, Power, Table };

// alpha_k for k = 0, 1, ...
//   Constant: c    Harmonic: c / (k + k0)    Power: c / (k + k0)^p    Table: table[k]
struct StepSchedule {
    ScheduleKind kind = ScheduleKind::Harmonic;
    double c = 1.0;
    double p = 1.0;
    double k0 = 1.0;
    std::vector<double> table;

    static StepSchedule constant(double c);
    static StepSchedule harmonic(double c, double k0 = 1.0);
    static StepSchedule power(double c, double p, double k0 = 1.0);
    static StepSchedule from_table(std::vector<double> values);

    double operator()(long k) const;
    std::vector<double> first(long K) const;
    bool nonincreasing(long K) const;
    std::string describe() const;
};

// "constant:0.1", "harmonic:1,1", "power:1,0.75,1", "table:0.5,0.25"
StepSchedule parse_schedule(const std::string& s);

struct Trajectory {
    Matrix points;       // n x (K+1), column k is x_k
    Matrix subgradients; // n x K, column k is v_k
    Vector steps;        // alpha_0 .. alpha_{K-1}
    Vector values;       // f(x_0) .. f(x_K)
    double next_step = 0.0; // alpha_K, the step the run would have taken next
    Policy policy = Policy::MinNorm;
    unsigned long long seed = 0;
    long requested = 0;
    bool truncated = false; // left the function box before `requested` steps

    long K() const { return static_cast<long>(steps.size()); }
    int dim() const { return static_cast<int>(points.rows()); }
    Vector x(long k) const { return points.col(k); }
};

// First k steps of a run; next_step becomes alpha_k.
Trajectory prefix(const Trajectory& tr, long k);

// The single place where the update is evaluated, so replays are bit-exact.
Vector subgradient_step(const Vector& x, double alpha, const Vector& v);

Trajectory run(const PiecewiseFunction& f, const Vector& x0, const StepSchedule& schedule,
               Policy policy, long K, unsigned long long seed = 42);

// Largest pairwise distance among columns. Exact; uses a hull in the plane
// and a bounding-box prefilter elsewhere.
template <typename Derived>
double diameter(const Eigen::MatrixBase<Derived>& pts);
double diameter_reference(const Matrix& pts);

// diam{x_a, ..., x_b}
double diameter(const Trajectory& tr, long a, long b);
// d_k = diam{x_k, ..., x_K} for k = 0..K; nonincreasing.
Vector tail_diameters(const Trajectory& tr);

struct Verdict {
    enum class Kind { ConvergedTo, Oscillating, Truncated };
    Kind kind = Kind::Truncated;
    Vector point;           // last iterate
    double amplitude = 0.0; // diameter of the last 10% of the trajectory
    long window_start = 0;
};

std::string to_string(Verdict::Kind k);

Verdict detect_convergence(const Trajectory& tr, double tol);

// |min-norm element of the Clarke set at x| <= tol.
bool critical_point_check(const PiecewiseFunction& f, const Vector& x, double tol,
                          double activity_tol = kActivityTol);

struct TraceMeta {
    std::string benchmark;
    std::string config_hash;
    std::string timestamp;
};

inline constexpr const char* kTraceSchema = "subgrad.trace/1";

// Columns: k, x_0..x_{n-1}, f, alpha, vnorm, policy. Three comment lines
// precede the header: schema, run identity, timestamp.
void write_trace_csv(std::ostream& os, const PiecewiseFunction& f, const Trajectory& tr,
                     const TraceMeta& meta);

std::string format_double(double v);

// Implementation of the dense diameter template.
namespace detail {
double diameter_impl(const Matrix& pts);
}

template <typename Derived>
double diameter(const Eigen::MatrixBase<Derived>& pts)
{
    return detail::diameter_impl(pts.template cast<double>().eval());
}

} // namespace sg
