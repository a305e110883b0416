#pragma once

#include "subgrad/polynomial.hpp"
#include "subgrad/types.hpp"

#include <random>
#include <string>
#include <vector>

namespace sg {

struct Stratum;

inline constexpr double kActivityTol = 1e-9;
inline constexpr int kGeneratorCap = 64;
inline constexpr double kMinNormTol = 1e-10;

enum class NodeKind { Leaf, Max, Min, Sum, Scale, Affine };

// Combinator tree over smooth leaves. Affine evaluates its single child at
// A x + b; Scale multiplies its single child by a constant.
struct Node {
    NodeKind kind = NodeKind::Leaf;
    int leaf = -1;
    double scale = 1.0;
    Matrix A;
    Vector b;
    std::vector<Node> children;
};

namespace expr {
Node leaf(int id);
Node max(std::vector<Node> children);
Node min(std::vector<Node> children);
Node sum(std::vector<Node> children);
Node scale(double c, Node child);
Node affine(Matrix A, Vector b, Node child);
} // namespace expr

class PiecewiseFunction {
public:
    PiecewiseFunction() = default;
    PiecewiseFunction(std::string name, std::vector<Polynomial> pieces, Node root,
                      Box box, double lipschitz, double critical_value = 0.0);

    const std::string& name() const { return name_; }
    int dim() const { return static_cast<int>(box_.dim()); }
    const std::vector<Polynomial>& pieces() const { return pieces_; }
    const Node& root() const { return root_; }
    const Box& box() const { return box_; }
    double lipschitz() const { return lipschitz_; }
    double critical_value() const { return critical_value_; }

    double operator()(const Vector& x) const;

private:
    std::string name_;
    std::vector<Polynomial> pieces_;
    Node root_;
    Box box_;
    double lipschitz_ = 1.0;
    double critical_value_ = 0.0;
};

double evaluate(const PiecewiseFunction& f, const Vector& x);

// Leaf ids whose value is within tol of the resolved value along Max/Min
// branches. Sorted, unique.
std::vector<int> active_pieces(const PiecewiseFunction& f, const Vector& x,
                               double tol = kActivityTol);

// Generators of the Clarke subdifferential, one per column.
Matrix clarke_subdifferential(const PiecewiseFunction& f, const Vector& x,
                              double tol = kActivityTol, int cap = kGeneratorCap);

struct MinNormResult {
    Vector point;
    Vector weights; // convex weights over the input columns
    int iterations = 0;
};

// Minimum-norm point of conv(columns of G). Deterministic active-set solve.
MinNormResult min_norm_point(const Matrix& G, double tol = kMinNormTol);
Vector min_norm_subgradient(const Matrix& G, double tol = kMinNormTol);

// Distance from v to conv(columns of G).
double hull_distance(const Matrix& G, const Vector& v, double tol = kMinNormTol);
bool in_convex_hull(const Matrix& G, const Vector& v, double tol = 1e-8);

enum class Policy { MinNorm, FirstActive, RandomVertex, RandomConvexCombination };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

Vector select_subgradient(const Matrix& G, Policy policy, std::mt19937_64& rng);

// P_T(v) for v in the Clarke set at y; all generators must agree after
// projection onto the tangent space of M.
Vector riemannian_gradient(const PiecewiseFunction& f, const Stratum& M, const Vector& y,
                           double agree_tol = 1e-6);

} // namespace sg
