#pragma once

#include "subgrad/polynomial.hpp"
#include "subgrad/types.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace sg {

// a . x < b
struct Halfspace {
    Vector a;
    double b = 0.0;
};

struct PointShape {
    Vector p;
};

// {base + B t : lower < t < upper, halfspaces hold}; B has orthonormal columns.
struct AffineShape {
    Vector base;
    Matrix basis;
    Vector lower;
    Vector upper;
    std::vector<Halfspace> halfspaces;
};

// {(a, xi(a)) : lower < a < upper}; the first k ambient coordinates are a.
struct GraphShape {
    Vector lower;
    Vector upper;
    PolyMap xi;
    double L0 = 1.0;
};

struct SphereShape {
    Vector center;
    double radius = 1.0;
};

// Open full-dimensional region {x : p(x) < 0 for every p}.
struct RegionShape {
    std::vector<Polynomial> inequalities;
};

using Shape = std::variant<PointShape, AffineShape, GraphShape, SphereShape, RegionShape>;

struct Stratum {
    int id = 0;
    int dim = 0;
    Shape shape;
    std::vector<int> frontier;

    std::string shape_name() const;
};

class Stratification {
public:
    Stratification() = default;
    Stratification(Box box, std::vector<Stratum> strata);

    int ambient_dim() const { return static_cast<int>(box_.dim()); }
    const Box& box() const { return box_; }
    const std::vector<Stratum>& strata() const { return strata_; }
    const Stratum& at(int id) const;
    int size() const { return static_cast<int>(strata_.size()); }

    bool is_open(int id) const { return at(id).dim == ambient_dim(); }
    std::vector<int> non_open_ids() const;
    // Transitive closure of the declared frontier relation.
    std::vector<int> frontier_closure(int id) const;

private:
    Box box_;
    std::vector<Stratum> strata_;
};

// Constructors for the common shapes.
Stratum make_point(int id, const Vector& p);
Stratum make_affine(int id, const Vector& base, const Matrix& basis, const Vector& lower,
                    const Vector& upper, std::vector<Halfspace> hs = {},
                    std::vector<int> frontier = {});
Stratum make_graph(int id, const Vector& lower, const Vector& upper, PolyMap xi, double L0,
                   std::vector<int> frontier = {});
Stratum make_sphere(int id, const Vector& center, double radius, std::vector<int> frontier = {});
Stratum make_region(int id, int n, std::vector<Polynomial> ineq, std::vector<int> frontier = {});

// Nearest point of the closure of M. Graph strata use a damped Newton solve
// with two restarts and throw OutsideTube on non-convergence or ambiguity.
Vector project(const Stratum& M, const Vector& x);
Vector project(const Stratification& S, int id, const Vector& x);

double distance(const Stratum& M, const Vector& x);
double distance(const Stratification& S, int id, const Vector& x);

// min over s in [0,1] of d(a + s (b - a), M).
double segment_distance(const Stratification& S, int id, const Vector& a, const Vector& b,
                        int graph_subdivisions = 64);

Matrix tangent_projector(const Stratum& M, const Vector& y);
Matrix normal_projector(const Stratum& M, const Vector& y);

// d(y, frontier of M); 1 when the frontier is empty.
double distance_to_frontier(const Stratification& S, int id, const Vector& y);

// Membership with a margin: points closer than tol to the relative boundary
// count as outside.
bool contains(const Stratum& M, const Vector& x, double tol = 1e-9);

Vector sample(const Stratum& M, const Box& ambient, std::mt19937_64& rng);

struct CheckResult {
    std::string name;
    bool passed = true;
    double worst_margin = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

ValidationReport validate_stratification(const Stratification& S, int samples = 200,
                                         unsigned long long seed = 42);

struct WConditionFit {
    double C = 0.0;
    double eta = 0.0;
    int pairs = 0;
    double max_violation = 0.0; // max of lhs - rhs over the pairs; <= 0 by construction
    bool within_cap = true;
};

// Fits |P_N(x) P_T(y)| <= C / d(y, frontier M_j)^eta * |x - y| over pairs
// x in M_i, y = nearest point of M_j. Minimizes eta first, then C, subject
// to C <= C_cap.
WConditionFit estimate_w_constants(const Stratification& S, int i, int j, int samples = 1000,
                                   unsigned long long seed = 42, double C_cap = 1e3);

struct StratumExponents {
    double beta = 0.0;
    double gamma = 0.0;
    double omega = 0.0;
    double eta = 1.0;
};

struct ExponentAssignment {
    double theta = 0.5;
    double beta = 0.0; // global
    std::map<int, StratumExponents> per_stratum;
};

// Smallest admissible exponent; assignments that would need anything
// smaller are reported as infeasible.
inline constexpr double kExponentFloor = 1e-6;

ExponentAssignment assign_exponents(const Stratification& S, double theta,
                                    const std::map<int, double>& eta = {},
                                    double floor = kExponentFloor);

} // namespace sg
