#include "subgrad/piecewise.hpp"

#include "subgrad/strata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace sg {

namespace expr {

Node leaf(int id)
{
    Node n;
    n.kind = NodeKind::Leaf;
    n.leaf = id;
    return n;
}

static Node nary(NodeKind k, std::vector<Node> children)
{
    if (children.empty())
        throw std::invalid_argument("combinator needs at least one child");
    Node n;
    n.kind = k;
    n.children = std::move(children);
    return n;
}

Node max(std::vector<Node> children) { return nary(NodeKind::Max, std::move(children)); }
Node min(std::vector<Node> children) { return nary(NodeKind::Min, std::move(children)); }
Node sum(std::vector<Node> children) { return nary(NodeKind::Sum, std::move(children)); }

Node scale(double c, Node child)
{
    Node n;
    n.kind = NodeKind::Scale;
    n.scale = c;
    n.children.push_back(std::move(child));
    return n;
}

Node affine(Matrix A, Vector b, Node child)
{
    if (A.rows() != b.size())
        throw DimensionMismatch("affine node: A and b disagree");
    Node n;
    n.kind = NodeKind::Affine;
    n.A = std::move(A);
    n.b = std::move(b);
    n.children.push_back(std::move(child));
    return n;
}

} // namespace expr

namespace {

void validate(const Node& n, int in_dim, const std::vector<Polynomial>& pieces)
{
    switch (n.kind) {
    case NodeKind::Leaf:
        if (n.leaf < 0 || n.leaf >= static_cast<int>(pieces.size()))
            throw std::invalid_argument("leaf id " + std::to_string(n.leaf) + " out of range");
        if (pieces[n.leaf].nvars() != in_dim)
            throw DimensionMismatch("leaf " + std::to_string(n.leaf) + " expects " +
                                    std::to_string(pieces[n.leaf].nvars()) + " variables, gets " +
                                    std::to_string(in_dim));
        return;
    case NodeKind::Affine:
        if (n.children.size() != 1)
            throw std::invalid_argument("affine node takes one child");
        if (n.A.cols() != in_dim)
            throw DimensionMismatch("affine node: A has wrong column count");
        validate(n.children[0], static_cast<int>(n.A.rows()), pieces);
        return;
    case NodeKind::Scale:
        if (n.children.size() != 1)
            throw std::invalid_argument("scale node takes one child");
        validate(n.children[0], in_dim, pieces);
        return;
    default:
        if (n.children.empty())
            throw std::invalid_argument("combinator needs at least one child");
        for (const auto& c : n.children)
            validate(c, in_dim, pieces);
    }
}

double eval_node(const Node& n, const Vector& x, const std::vector<Polynomial>& pieces)
{
    switch (n.kind) {
    case NodeKind::Leaf:
        return pieces[n.leaf](x);
    case NodeKind::Scale:
        return n.scale * eval_node(n.children[0], x, pieces);
    case NodeKind::Affine:
        return eval_node(n.children[0], n.A * x + n.b, pieces);
    case NodeKind::Sum: {
        double s = 0.0;
        for (const auto& c : n.children)
            s += eval_node(c, x, pieces);
        return s;
    }
    case NodeKind::Max: {
        double m = -kInf;
        for (const auto& c : n.children)
            m = std::max(m, eval_node(c, x, pieces));
        return m;
    }
    case NodeKind::Min: {
        double m = kInf;
        for (const auto& c : n.children)
            m = std::min(m, eval_node(c, x, pieces));
        return m;
    }
    }
    return 0.0;
}

// Children of a Max/Min node that are active at x.
std::vector<const Node*> active_children(const Node& n, const Vector& x,
                                         const std::vector<Polynomial>& pieces, double tol)
{
    std::vector<double> vals;
    vals.reserve(n.children.size());
    for (const auto& c : n.children)
        vals.push_back(eval_node(c, x, pieces));
    const bool is_max = n.kind == NodeKind::Max;
    const double best = is_max ? *std::max_element(vals.begin(), vals.end())
                               : *std::min_element(vals.begin(), vals.end());
    std::vector<const Node*> out;
    for (size_t i = 0; i < vals.size(); ++i)
        if (std::abs(vals[i] - best) <= tol)
            out.push_back(&n.children[i]);
    return out;
}

void collect_active(const Node& n, const Vector& x, const std::vector<Polynomial>& pieces,
                    double tol, std::set<int>& out)
{
    switch (n.kind) {
    case NodeKind::Leaf:
        out.insert(n.leaf);
        return;
    case NodeKind::Scale:
        collect_active(n.children[0], x, pieces, tol, out);
        return;
    case NodeKind::Affine:
        collect_active(n.children[0], n.A * x + n.b, pieces, tol, out);
        return;
    case NodeKind::Sum:
        for (const auto& c : n.children)
            collect_active(c, x, pieces, tol, out);
        return;
    case NodeKind::Max:
    case NodeKind::Min:
        for (const Node* c : active_children(n, x, pieces, tol))
            collect_active(*c, x, pieces, tol, out);
        return;
    }
}

void push_unique(std::vector<Vector>& gens, const Vector& g)
{
    for (const auto& h : gens)
        if ((h - g).norm() <= 1e-14 * (1.0 + g.norm()))
            return;
    gens.push_back(g);
}

std::vector<Vector> gens_node(const Node& n, const Vector& x,
                              const std::vector<Polynomial>& pieces, double tol, int cap)
{
    switch (n.kind) {
    case NodeKind::Leaf:
        return {pieces[n.leaf].gradient(x)};
    case NodeKind::Scale: {
        auto g = gens_node(n.children[0], x, pieces, tol, cap);
        for (auto& v : g)
            v *= n.scale;
        return g;
    }
    case NodeKind::Affine: {
        auto g = gens_node(n.children[0], n.A * x + n.b, pieces, tol, cap);
        std::vector<Vector> out;
        for (const auto& v : g)
            push_unique(out, n.A.transpose() * v);
        return out;
    }
    case NodeKind::Sum: {
        std::vector<Vector> acc{Vector::Zero(x.size())};
        for (const auto& c : n.children) {
            auto g = gens_node(c, x, pieces, tol, cap);
            if (acc.size() * g.size() > static_cast<size_t>(cap))
                throw GeneratorOverflow("sum node produces " +
                                        std::to_string(acc.size() * g.size()) +
                                        " generators (cap " + std::to_string(cap) + ")");
            std::vector<Vector> next;
            for (const auto& a : acc)
                for (const auto& v : g)
                    push_unique(next, a + v);
            acc = std::move(next);
        }
        return acc;
    }
    case NodeKind::Max:
    case NodeKind::Min: {
        std::vector<Vector> out;
        for (const Node* c : active_children(n, x, pieces, tol))
            for (const auto& v : gens_node(*c, x, pieces, tol, cap))
                push_unique(out, v);
        if (out.size() > static_cast<size_t>(cap))
            throw GeneratorOverflow("max/min node produces " + std::to_string(out.size()) +
                                    " generators (cap " + std::to_string(cap) + ")");
        return out;
    }
    }
    return {};
}

} // namespace

PiecewiseFunction::PiecewiseFunction(std::string name, std::vector<Polynomial> pieces, Node root,
                                     Box box, double lipschitz, double critical_value)
    : name_(std::move(name)), pieces_(std::move(pieces)), root_(std::move(root)),
      box_(std::move(box)), lipschitz_(lipschitz), critical_value_(critical_value)
{
    if (box_.lower.size() != box_.upper.size() || box_.lower.size() == 0)
        throw DimensionMismatch("function box is malformed");
    validate(root_, dim(), pieces_);
}

double PiecewiseFunction::operator()(const Vector& x) const { return evaluate(*this, x); }

double evaluate(const PiecewiseFunction& f, const Vector& x)
{
    if (x.size() != f.dim())
        throw DimensionMismatch("point dimension does not match function");
    return eval_node(f.root(), x, f.pieces());
}

std::vector<int> active_pieces(const PiecewiseFunction& f, const Vector& x, double tol)
{
    if (x.size() != f.dim())
        throw DimensionMismatch("point dimension does not match function");
    std::set<int> s;
    collect_active(f.root(), x, f.pieces(), tol, s);
    return {s.begin(), s.end()};
}

Matrix clarke_subdifferential(const PiecewiseFunction& f, const Vector& x, double tol, int cap)
{
    if (x.size() != f.dim())
        throw DimensionMismatch("point dimension does not match function");
    auto gens = gens_node(f.root(), x, f.pieces(), tol, cap);
    Matrix G(x.size(), static_cast<Eigen::Index>(gens.size()));
    for (size_t i = 0; i < gens.size(); ++i)
        G.col(static_cast<Eigen::Index>(i)) = gens[i];
    return G;
}

MinNormResult min_norm_point(const Matrix& G, double tol)
{
    using Eigen::Index;
    const Index m = G.cols();
    if (m == 0)
        throw EmptyGeneratorSet("min-norm point of an empty set");
    const double scale = std::max(G.colwise().squaredNorm().maxCoeff(), 1e-300);

    Index j0 = 0;
    G.colwise().squaredNorm().minCoeff(&j0);
    std::vector<Index> S{j0};
    std::vector<double> lam{1.0};
    Vector x = G.col(j0);

    MinNormResult res;
    const int max_iter = 50 * static_cast<int>(m) + 50;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        Index j = 0;
        const double dmin = (G.transpose() * x).minCoeff(&j);
        if (x.squaredNorm() - dmin <= tol * scale)
            break;
        if (std::find(S.begin(), S.end(), j) != S.end())
            break;
        S.push_back(j);
        lam.push_back(0.0);

        for (;;) {
            const Index s = static_cast<Index>(S.size());
            Matrix P(G.rows(), s);
            for (Index i = 0; i < s; ++i)
                P.col(i) = G.col(S[i]);
            // Affine minimizer over the current corral.
            Matrix K = Matrix::Zero(s + 1, s + 1);
            K.topLeftCorner(s, s) = P.transpose() * P;
            K.block(0, s, s, 1).setOnes();
            K.block(s, 0, 1, s).setOnes();
            Vector rhs = Vector::Zero(s + 1);
            rhs[s] = 1.0;
            const Vector mu = K.completeOrthogonalDecomposition().solve(rhs).head(s);

            if ((mu.array() > 1e-15).all()) {
                for (Index i = 0; i < s; ++i)
                    lam[i] = mu[i];
                break;
            }
            double theta = 1.0;
            Index drop = -1;
            for (Index i = 0; i < s; ++i) {
                if (mu[i] <= 1e-15) {
                    const double t = lam[i] / (lam[i] - mu[i]);
                    if (t < theta || drop < 0) {
                        theta = std::min(theta, t);
                        drop = i;
                    }
                }
            }
            std::vector<Index> S2;
            std::vector<double> lam2;
            for (Index i = 0; i < s; ++i) {
                const double l = lam[i] + theta * (mu[i] - lam[i]);
                if (i == drop || l <= 1e-15)
                    continue;
                S2.push_back(S[i]);
                lam2.push_back(l);
            }
            if (S2.empty()) {
                S2.push_back(S[0]);
                lam2.push_back(1.0);
            }
            const double tot = std::accumulate(lam2.begin(), lam2.end(), 0.0);
            for (auto& l : lam2)
                l /= tot;
            S = std::move(S2);
            lam = std::move(lam2);
        }
        x.setZero();
        for (size_t i = 0; i < S.size(); ++i)
            x += lam[i] * G.col(S[i]);
    }

    res.point = x;
    res.weights = Vector::Zero(m);
    for (size_t i = 0; i < S.size(); ++i)
        res.weights[S[i]] += lam[i];
    return res;
}

Vector min_norm_subgradient(const Matrix& G, double tol) { return min_norm_point(G, tol).point; }

double hull_distance(const Matrix& G, const Vector& v, double tol)
{
    if (G.rows() != v.size())
        throw DimensionMismatch("hull_distance: dimension mismatch");
    Matrix D = G.colwise() - v;
    return min_norm_point(D, tol).point.norm();
}

bool in_convex_hull(const Matrix& G, const Vector& v, double tol)
{
    return hull_distance(G, v) <= tol;
}

std::string to_string(Policy p)
{
    switch (p) {
    case Policy::MinNorm: return "min_norm";
    case Policy::FirstActive: return "first_active";
    case Policy::RandomVertex: return "random_vertex";
    case Policy::RandomConvexCombination: return "random_convex";
    }
    return "?";
}

Policy policy_from_string(const std::string& s)
{
    if (s == "min_norm") return Policy::MinNorm;
    if (s == "first_active") return Policy::FirstActive;
    if (s == "random_vertex") return Policy::RandomVertex;
    if (s == "random_convex") return Policy::RandomConvexCombination;
    throw std::invalid_argument("unknown selection policy '" + s + "'");
}

Vector select_subgradient(const Matrix& G, Policy policy, std::mt19937_64& rng)
{
    if (G.cols() == 0)
        throw EmptyGeneratorSet("cannot select from an empty generator set");
    switch (policy) {
    case Policy::MinNorm:
        return min_norm_subgradient(G);
    case Policy::FirstActive:
        return G.col(0);
    case Policy::RandomVertex: {
        std::uniform_int_distribution<Eigen::Index> pick(0, G.cols() - 1);
        return G.col(pick(rng));
    }
    case Policy::RandomConvexCombination: {
        // Dirichlet(1,...,1) weights.
        std::exponential_distribution<double> ex(1.0);
        Vector w(G.cols());
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w[i] = ex(rng);
        w /= w.sum();
        return G * w;
    }
    }
    return G.col(0);
}

Vector riemannian_gradient(const PiecewiseFunction& f, const Stratum& M, const Vector& y,
                           double agree_tol)
{
    const Matrix PT = tangent_projector(M, y);
    double gap = 0.0;
    // Near a lower stratum the absolute activity tolerance can pick up pieces
    // that are inactive along M; retry with ties at rounding level only.
    for (double tol : {kActivityTol, 1e-14 * (1.0 + std::abs(evaluate(f, y)))}) {
        const Matrix R = PT * clarke_subdifferential(f, y, tol);
        gap = 0.0;
        for (Eigen::Index i = 1; i < R.cols(); ++i)
            gap = std::max(gap, (R.col(i) - R.col(0)).norm());
        if (gap <= agree_tol)
            return R.col(0);
    }
    throw InconsistentStratification("projected generators disagree by " + std::to_string(gap) +
                                     " on stratum " + std::to_string(M.id) +
                                     "; the function is not smooth along it");
}

} // namespace sg
