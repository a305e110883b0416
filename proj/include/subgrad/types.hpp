#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace sg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis-aligned box; infinite bounds allowed.
struct Box {
    Vector lower;
    Vector upper;

    Eigen::Index dim() const { return lower.size(); }
    bool contains(const Vector& x, double tol = 0.0) const
    {
        if (x.size() != lower.size())
            return false;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x[i] < lower[i] - tol || x[i] > upper[i] + tol)
                return false;
        return true;
    }
};

inline Box make_box(const Vector& lo, const Vector& hi) { return Box{lo, hi}; }

inline Box cube(Eigen::Index n, double lo, double hi)
{
    return Box{Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

// Error hierarchy. Each named failure mode gets its own type so callers can
// catch precisely; everything derives from sg::Error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define SG_DEFINE_ERROR(Name)                                                  \
    struct Name : Error {                                                      \
        using Error::Error;                                                    \
    }

SG_DEFINE_ERROR(DimensionMismatch);
SG_DEFINE_ERROR(GeneratorOverflow);
SG_DEFINE_ERROR(EmptyGeneratorSet);
SG_DEFINE_ERROR(InconsistentStratification);
SG_DEFINE_ERROR(OutsideTube);
SG_DEFINE_ERROR(InvalidStratification);
SG_DEFINE_ERROR(DegenerateCell);
SG_DEFINE_ERROR(InvalidCell);
SG_DEFINE_ERROR(NoSamplePairs);
SG_DEFINE_ERROR(DisconnectedSample);
SG_DEFINE_ERROR(InfeasibleExponents);
SG_DEFINE_ERROR(DomainError);
SG_DEFINE_ERROR(InvalidSchedule);
SG_DEFINE_ERROR(NonDecreasingSchedule);
SG_DEFINE_ERROR(DegenerateSamples);
SG_DEFINE_ERROR(ConstantsMissing);
SG_DEFINE_ERROR(Infeasible);
SG_DEFINE_ERROR(InsufficientDecades);
SG_DEFINE_ERROR(UnknownBenchmark);
SG_DEFINE_ERROR(ConfigError);

#undef SG_DEFINE_ERROR

} // namespace sg
