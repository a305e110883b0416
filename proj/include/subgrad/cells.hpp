#pragma once

#include "subgrad/polynomial.hpp"
#include "subgrad/strata.hpp"
#include "subgrad/types.hpp"

#include <memory>
#include <random>

namespace sg {

enum class CellKind { Interval, Singleton, Graph, Band };

// Recursively defined regular cell in R^m, m <= 3. Graph and Band cells sit
// over a base cell in R^(m-1); the last coordinate is the graph/band height.
struct LRegularCell {
    CellKind kind = CellKind::Interval;
    double a = 0.0; // Interval endpoints / Singleton position
    double b = 0.0;
    std::shared_ptr<const LRegularCell> base;
    Polynomial lo; // Graph map, or the lower Band boundary
    Polynomial hi; // upper Band boundary
    double L0 = 1.0;

    int ambient_dim() const;
    int dim() const;
};

inline constexpr int kMaxCellDim = 3;

namespace cells {
LRegularCell interval(double a, double b);
LRegularCell singleton(double p);
LRegularCell graph(const LRegularCell& base, Polynomial xi, double L0);
LRegularCell band(const LRegularCell& base, Polynomial lower, Polynomial upper, double L0);
} // namespace cells

bool contains(const LRegularCell& C, const Vector& x, double tol = 1e-9);
Vector sample(const LRegularCell& C, std::mt19937_64& rng);

// d(x, frontier of C); +inf when the frontier is empty.
double frontier_distance(const LRegularCell& C, const Vector& x);

// Band ordering and Lipschitz bounds on samples.
ValidationReport validate_cell(const LRegularCell& C, int samples = 1000,
                               unsigned long long seed = 42);

struct ShrinkParams {
    double c = 1.0;     // band width constant
    double kappa = 1.0; // band width exponent
    // Scales the band margin inside the certified frontier distance only.
    // Anything other than 1 produces an uncertified bound.
    double margin_scale = 1.0;
};

struct ShrunkenCell {
    LRegularCell cell; // M(t)
    double t = 0.0;
    double rho = 1.0;
    double theta = 1.0;
    double beta = 0.0; // band margin at this level (0 for non-band cells)

    double margin() const;
};

ShrunkenCell shrink_cell(const LRegularCell& C, double t, const ShrinkParams& params = {});

struct InclusionReport {
    int samples = 0;
    int left_checked = 0;
    int left_violations = 0;
    int right_violations = 0;
    double worst_left = 0.0;  // largest d(x, frontier) - t among left failures
    double worst_right = 0.0; // largest margin shortfall among right failures
};

// Left: M minus B(frontier, t) inside M(t). Right: M(t) inside M minus
// B(frontier, rho t^theta).
InclusionReport verify_inclusions(const LRegularCell& C, const ShrunkenCell& Mt,
                                  int samples = 10000, unsigned long long seed = 42);

struct QuasiconvexityEstimate {
    double C = 1.0;
    int nodes = 0;
    int edges = 0;
};

// Largest ratio of graph path length to Euclidean distance over sampled pairs.
// k is the neighbour count used for lower-dimensional cells.
QuasiconvexityEstimate quasiconvexity_estimate(const LRegularCell& C, int samples = 400,
                                               unsigned long long seed = 42, int k = 24);

} // namespace sg
