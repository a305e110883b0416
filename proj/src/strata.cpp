#include "subgrad/strata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <set>

namespace sg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Local-coordinate constraints C t <= d of an affine patch.
struct LocalPoly {
    Matrix C;
    Vector d;
};

LocalPoly local_constraints(const AffineShape& s)
{
    const Eigen::Index k = s.basis.cols();
    std::vector<Vector> rows;
    std::vector<double> rhs;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (std::isfinite(s.lower[i])) {
            rows.push_back(-Vector::Unit(k, i));
            rhs.push_back(-s.lower[i]);
        }
        if (std::isfinite(s.upper[i])) {
            rows.push_back(Vector::Unit(k, i));
            rhs.push_back(s.upper[i]);
        }
    }
    for (const auto& h : s.halfspaces) {
        rows.push_back(s.basis.transpose() * h.a);
        rhs.push_back(h.b - h.a.dot(s.base));
    }
    LocalPoly P;
    P.C.resize(static_cast<Eigen::Index>(rows.size()), k);
    P.d.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        P.C.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        P.d[static_cast<Eigen::Index>(r)] = rhs[r];
    }
    return P;
}

bool feasible(const LocalPoly& P, const Vector& t, double slack)
{
    if (P.C.rows() == 0)
        return true;
    return ((P.C * t - P.d).array() <= slack).all();
}

// Nearest point of the closed polyhedron {C t <= d} to t0, by enumerating
// active sets of at most k independent constraints.
Vector nearest_local(const LocalPoly& P, const Vector& t0)
{
    const double slack = 1e-12 * (1.0 + t0.lpNorm<Eigen::Infinity>());
    if (feasible(P, t0, slack))
        return t0;
    const int m = static_cast<int>(P.C.rows());
    const int k = static_cast<int>(P.C.cols());
    if (m > 20)
        throw std::invalid_argument("affine patch has too many constraints");
    Vector best;
    double best_d = kInf;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        const int s = std::popcount(mask);
        if (s > k)
            continue;
        Matrix Cs(s, k);
        Vector ds(s);
        int r = 0;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) {
                Cs.row(r) = P.C.row(i);
                ds[r] = P.d[i];
                ++r;
            }
        const Matrix G = Cs * Cs.transpose();
        Eigen::FullPivLU<Matrix> lu(G);
        if (lu.rank() < s)
            continue;
        const Vector t = t0 - Cs.transpose() * lu.solve(Cs * t0 - ds);
        if (!feasible(P, t, slack))
            continue;
        const double dd = (t - t0).squaredNorm();
        if (dd < best_d) {
            best_d = dd;
            best = t;
        }
    }
    if (best.size() == 0)
        throw InvalidStratification("affine patch has an empty closure");
    return best;
}

Vector clamp_box(const Vector& a, const Vector& lo, const Vector& hi)
{
    return a.cwiseMax(lo).cwiseMin(hi);
}

struct GraphSolve {
    Vector a;
    double phi = kInf;
    bool converged = false;
};

double graph_phi(const GraphShape& g, const Vector& x, const Vector& a)
{
    const Eigen::Index k = a.size();
    return 0.5 * ((a - x.head(k)).squaredNorm() + (g.xi(a) - x.tail(x.size() - k)).squaredNorm());
}

Vector graph_grad(const GraphShape& g, const Vector& x, const Vector& a)
{
    const Eigen::Index k = a.size();
    const Vector rb = g.xi(a) - x.tail(x.size() - k);
    return (a - x.head(k)) + g.xi.jacobian(a).transpose() * rb;
}

Vector projected_gradient(const Vector& grad, const Vector& a, const Vector& lo, const Vector& hi)
{
    Vector pg = grad;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if ((a[i] <= lo[i] && grad[i] > 0) || (a[i] >= hi[i] && grad[i] < 0))
            pg[i] = 0.0;
    return pg;
}

GraphSolve graph_newton(const GraphShape& g, const Vector& x, Vector a)
{
    const Eigen::Index k = a.size();
    const Eigen::Index m = x.size() - k;
    a = clamp_box(a, g.lower, g.upper);
    double phi = graph_phi(g, x, a);
    double last_step = kInf;
    GraphSolve out;
    for (int it = 0; it <= 100; ++it) {
        const Vector grad = graph_grad(g, x, a);
        const double pgn = projected_gradient(grad, a, g.lower, g.upper).norm();
        if (pgn <= 1e-14 || (pgn <= 1e-10 && last_step <= 1e-10 * (1.0 + a.norm()))) {
            out.converged = true;
            break;
        }
        if (it == 100)
            break;
        const Matrix J = g.xi.jacobian(a);
        const Vector rb = g.xi(a) - x.tail(m);
        Matrix H = Matrix::Identity(k, k) + J.transpose() * J;
        for (Eigen::Index i = 0; i < m; ++i)
            H += rb[i] * g.xi.comps[i].hessian(a);
        Eigen::LDLT<Matrix> ldlt(H);
        Vector d;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
            (ldlt.vectorD().array() > 1e-14).all())
            d = -ldlt.solve(grad);
        else
            d = -(Matrix::Identity(k, k) * (1.0 + 1e-3) + J.transpose() * J).ldlt().solve(grad);
        if (grad.dot(d) >= 0)
            d = -grad;
        double s = 1.0;
        Vector a_new = a;
        double phi_new = phi;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            a_new = clamp_box(a + s * d, g.lower, g.upper);
            phi_new = graph_phi(g, x, a_new);
            if (phi_new <= phi + 1e-4 * grad.dot(a_new - a)) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            a_new = a;
            phi_new = phi;
        }
        last_step = (a_new - a).norm();
        a = a_new;
        phi = phi_new;
        if (!accepted && pgn <= 1e-10) {
            out.converged = true;
            break;
        }
    }
    out.a = a;
    out.phi = phi;
    return out;
}

// strict: throw on non-convergence or on two equally near solutions.
Vector graph_nearest(const GraphShape& g, const Vector& x, bool strict)
{
    const Eigen::Index k = g.lower.size();
    const Vector xa = x.head(k);
    std::vector<GraphSolve> runs;
    runs.push_back(graph_newton(g, x, xa));
    std::mt19937_64 rng(0x5eedULL);
    const double spread = 2.0 * (1.0 + x.norm());
    for (int r = 0; r < 2; ++r) {
        Vector a(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            const double lo = std::isfinite(g.lower[i]) ? g.lower[i] : xa[i] - spread;
            const double hi = std::isfinite(g.upper[i]) ? g.upper[i] : xa[i] + spread;
            a[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
        }
        runs.push_back(graph_newton(g, x, a));
    }
    const GraphSolve* best = nullptr;
    for (const auto& r : runs)
        if ((r.converged || !strict) && (!best || r.phi < best->phi))
            best = &r;
    if (!best)
        throw OutsideTube("graph projection did not converge within 100 steps");
    if (strict) {
        for (const auto& r : runs) {
            if (!r.converged || &r == best)
                continue;
            const bool same_level = r.phi <= best->phi + 1e-12 * (1.0 + best->phi);
            // A flat minimum lets restarts stop apart without a barrier
            // between them; only separated minima are ambiguous.
            const Vector mid = 0.5 * (r.a + best->a);
            const bool separated = graph_phi(g, x, mid) > r.phi + 1e-12 * (1.0 + best->phi);
            if (same_level && separated && (r.a - best->a).norm() > 1e-6)
                throw OutsideTube("graph projection is ambiguous: restarts disagree by " +
                                  std::to_string((r.a - best->a).norm()));
        }
    }
    Vector y(x.size());
    y.head(k) = best->a;
    y.tail(x.size() - k) = g.xi(best->a);
    return y;
}

Vector affine_project(const AffineShape& s, const Vector& x)
{
    const Vector t0 = s.basis.transpose() * (x - s.base);
    const Vector t = nearest_local(local_constraints(s), t0);
    return s.base + s.basis * t;
}

void check_ambient(const Stratum& M, const Vector& x)
{
    const Eigen::Index n = std::visit(
        overloaded{[](const PointShape& s) { return s.p.size(); },
                   [](const AffineShape& s) { return s.base.size(); },
                   [](const GraphShape& s) { return s.lower.size() + s.xi.out_dim(); },
                   [](const SphereShape& s) { return s.center.size(); },
                   [&](const RegionShape&) { return x.size(); }},
        M.shape);
    if (n != x.size())
        throw DimensionMismatch("point dimension does not match stratum " + std::to_string(M.id));
}

// Golden-section minimum of a convex function on [0,1].
double golden_min(const std::function<double(double)>& h)
{
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = 1.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = h(c), fd = h(d);
    for (int i = 0; i < 90; ++i) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = h(d);
        }
    }
    return std::min({fc, fd, h(0.0), h(1.0)});
}

} // namespace

std::string Stratum::shape_name() const
{
    return std::visit(overloaded{[](const PointShape&) { return "point"; },
                                 [](const AffineShape&) { return "affine"; },
                                 [](const GraphShape&) { return "graph"; },
                                 [](const SphereShape&) { return "sphere"; },
                                 [](const RegionShape&) { return "region"; }},
                      shape);
}

Stratification::Stratification(Box box, std::vector<Stratum> strata)
    : box_(std::move(box)), strata_(std::move(strata))
{
    for (size_t i = 0; i < strata_.size(); ++i) {
        if (strata_[i].id != static_cast<int>(i))
            throw InvalidStratification("stratum ids must equal their positions (got " +
                                        std::to_string(strata_[i].id) + " at " +
                                        std::to_string(i) + ")");
        for (int j : strata_[i].frontier)
            if (j < 0 || j >= static_cast<int>(strata_.size()) || j == static_cast<int>(i))
                throw InvalidStratification("stratum " + std::to_string(i) +
                                            " has an invalid frontier id " + std::to_string(j));
    }
}

const Stratum& Stratification::at(int id) const
{
    if (id < 0 || id >= size())
        throw std::out_of_range("no stratum with id " + std::to_string(id));
    return strata_[id];
}

std::vector<int> Stratification::non_open_ids() const
{
    std::vector<int> out;
    for (const auto& s : strata_)
        if (s.dim < ambient_dim())
            out.push_back(s.id);
    return out;
}

std::vector<int> Stratification::frontier_closure(int id) const
{
    std::set<int> seen;
    std::vector<int> stack(at(id).frontier.begin(), at(id).frontier.end());
    while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        if (!seen.insert(j).second)
            continue;
        if (j == id)
            throw InvalidStratification("frontier relation has a cycle through stratum " +
                                        std::to_string(id));
        for (int l : at(j).frontier)
            stack.push_back(l);
    }
    return {seen.begin(), seen.end()};
}

Stratum make_point(int id, const Vector& p) { return Stratum{id, 0, PointShape{p}, {}}; }

Stratum make_affine(int id, const Vector& base, const Matrix& basis, const Vector& lower,
                    const Vector& upper, std::vector<Halfspace> hs, std::vector<int> frontier)
{
    if (basis.rows() != base.size() || lower.size() != basis.cols() || upper.size() != basis.cols())
        throw DimensionMismatch("affine patch: inconsistent sizes");
    return Stratum{id, static_cast<int>(basis.cols()),
                   AffineShape{base, basis, lower, upper, std::move(hs)}, std::move(frontier)};
}

Stratum make_graph(int id, const Vector& lower, const Vector& upper, PolyMap xi, double L0,
                   std::vector<int> frontier)
{
    if (lower.size() != upper.size() || xi.in_dim() != lower.size())
        throw DimensionMismatch("graph stratum: inconsistent sizes");
    const int k = static_cast<int>(lower.size());
    return Stratum{id, k, GraphShape{lower, upper, std::move(xi), L0}, std::move(frontier)};
}

Stratum make_sphere(int id, const Vector& center, double radius, std::vector<int> frontier)
{
    return Stratum{id, static_cast<int>(center.size()) - 1, SphereShape{center, radius},
                   std::move(frontier)};
}

Stratum make_region(int id, int n, std::vector<Polynomial> ineq, std::vector<int> frontier)
{
    for (const auto& p : ineq)
        if (p.nvars() != n)
            throw DimensionMismatch("region inequality has wrong variable count");
    return Stratum{id, n, RegionShape{std::move(ineq)}, std::move(frontier)};
}

Vector project(const Stratum& M, const Vector& x)
{
    check_ambient(M, x);
    return std::visit(
        overloaded{
            [&](const PointShape& s) -> Vector { return s.p; },
            [&](const AffineShape& s) -> Vector { return affine_project(s, x); },
            [&](const GraphShape& s) -> Vector { return graph_nearest(s, x, true); },
            [&](const SphereShape& s) -> Vector {
                const Vector u = x - s.center;
                const double r = u.norm();
                if (r < 1e-12)
                    throw OutsideTube("sphere projection of its center is ambiguous");
                return s.center + s.radius * u / r;
            },
            [&](const RegionShape&) -> Vector {
                if (contains(M, x, 0.0))
                    return x;
                throw OutsideTube("projection onto an open region from outside needs the "
                                  "stratification");
            }},
        M.shape);
}

Vector project(const Stratification& S, int id, const Vector& x)
{
    const Stratum& M = S.at(id);
    if (!std::holds_alternative<RegionShape>(M.shape) || contains(M, x, 0.0))
        return project(M, x);
    const auto fr = S.frontier_closure(id);
    if (fr.empty())
        throw OutsideTube("region without frontier cannot be reached from outside");
    Vector best;
    double bd = kInf;
    for (int j : fr) {
        const Vector y = project(S.at(j), x);
        const double d = (x - y).norm();
        if (d < bd) {
            bd = d;
            best = y;
        }
    }
    return best;
}

double distance(const Stratum& M, const Vector& x)
{
    check_ambient(M, x);
    if (const auto* g = std::get_if<GraphShape>(&M.shape))
        return (x - graph_nearest(*g, x, false)).norm();
    if (const auto* s = std::get_if<SphereShape>(&M.shape))
        return std::abs((x - s->center).norm() - s->radius);
    return (x - project(M, x)).norm();
}

double distance(const Stratification& S, int id, const Vector& x)
{
    const Stratum& M = S.at(id);
    if (!std::holds_alternative<RegionShape>(M.shape))
        return distance(M, x);
    if (contains(M, x, 0.0))
        return 0.0;
    double bd = kInf;
    for (int j : S.frontier_closure(id))
        bd = std::min(bd, distance(S.at(j), x));
    return bd;
}

double segment_distance(const Stratification& S, int id, const Vector& a, const Vector& b,
                        int graph_subdivisions)
{
    const Stratum& M = S.at(id);
    check_ambient(M, a);
    const Vector d = b - a;
    if (const auto* p = std::get_if<PointShape>(&M.shape)) {
        const double dd = d.squaredNorm();
        const double s = dd > 0 ? std::clamp((p->p - a).dot(d) / dd, 0.0, 1.0) : 0.0;
        return (a + s * d - p->p).norm();
    }
    if (const auto* s = std::get_if<SphereShape>(&M.shape)) {
        const double dd = d.squaredNorm();
        const double t = dd > 0 ? std::clamp((s->center - a).dot(d) / dd, 0.0, 1.0) : 0.0;
        const double rmin = (a + t * d - s->center).norm();
        const double rmax = std::max((a - s->center).norm(), (b - s->center).norm());
        if (rmin <= s->radius && s->radius <= rmax)
            return 0.0;
        return std::min(std::abs(rmin - s->radius), std::abs(rmax - s->radius));
    }
    if (const auto* s = std::get_if<AffineShape>(&M.shape)) {
        const LocalPoly P = local_constraints(*s);
        if (P.C.rows() == 0) {
            // Distance to the full subspace is a convex quadratic in the
            // segment parameter.
            const Matrix Q = Matrix::Identity(a.size(), a.size()) - s->basis * s->basis.transpose();
            const Vector u = Q * (a - s->base);
            const Vector w = Q * d;
            const double ww = w.squaredNorm();
            const double t = ww > 0 ? std::clamp(-u.dot(w) / ww, 0.0, 1.0) : 0.0;
            return (u + t * w).norm();
        }
        return golden_min([&](double t) { return distance(M, Vector(a + t * d)); });
    }
    double best = kInf;
    for (int i = 0; i <= graph_subdivisions; ++i) {
        const double t = static_cast<double>(i) / graph_subdivisions;
        best = std::min(best, distance(S, id, Vector(a + t * d)));
    }
    return best;
}

Matrix tangent_projector(const Stratum& M, const Vector& y)
{
    check_ambient(M, y);
    const Eigen::Index n = y.size();
    return std::visit(
        overloaded{[&](const PointShape&) -> Matrix { return Matrix::Zero(n, n); },
                   [&](const AffineShape& s) -> Matrix { return s.basis * s.basis.transpose(); },
                   [&](const GraphShape& s) -> Matrix {
                       const Eigen::Index k = s.lower.size();
                       Matrix J(n, k);
                       J.topRows(k).setIdentity();
                       J.bottomRows(n - k) = s.xi.jacobian(y.head(k));
                       return J * (J.transpose() * J).ldlt().solve(J.transpose());
                   },
                   [&](const SphereShape& s) -> Matrix {
                       const Vector u = (y - s.center).normalized();
                       return Matrix::Identity(n, n) - u * u.transpose();
                   },
                   [&](const RegionShape&) -> Matrix { return Matrix::Identity(n, n); }},
        M.shape);
}

Matrix normal_projector(const Stratum& M, const Vector& y)
{
    return Matrix::Identity(y.size(), y.size()) - tangent_projector(M, y);
}

double distance_to_frontier(const Stratification& S, int id, const Vector& y)
{
    const auto fr = S.frontier_closure(id);
    if (fr.empty())
        return 1.0;
    double d = kInf;
    for (int j : fr)
        d = std::min(d, distance(S, j, y));
    return d;
}

bool contains(const Stratum& M, const Vector& x, double tol)
{
    check_ambient(M, x);
    return std::visit(
        overloaded{
            [&](const PointShape& s) { return (x - s.p).norm() <= tol; },
            [&](const AffineShape& s) {
                const Vector t = s.basis.transpose() * (x - s.base);
                if ((x - s.base - s.basis * t).norm() > tol)
                    return false;
                const LocalPoly P = local_constraints(s);
                return P.C.rows() == 0 || ((P.C * t - P.d).array() < -tol).all();
            },
            [&](const GraphShape& s) {
                const Eigen::Index k = s.lower.size();
                const Vector a = x.head(k);
                if (((a - s.lower).array() <= tol).any() || ((s.upper - a).array() <= tol).any())
                    return false;
                return (x.tail(x.size() - k) - s.xi(a)).norm() <= tol;
            },
            [&](const SphereShape& s) {
                return std::abs((x - s.center).norm() - s.radius) <= tol;
            },
            [&](const RegionShape& s) {
                for (const auto& p : s.inequalities)
                    if (!(p(x) < -tol))
                        return false;
                return true;
            }},
        M.shape);
}

Vector sample(const Stratum& M, const Box& ambient, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Eigen::Index n = ambient.dim();
    auto in_box = [&](const Vector& y) { return ambient.contains(y); };
    for (int attempt = 0; attempt < 100000; ++attempt) {
        Vector y = std::visit(
            overloaded{
                [&](const PointShape& s) -> Vector { return s.p; },
                [&](const AffineShape& s) -> Vector {
                    // Local ranges induced by the ambient box around the base.
                    const double R = (ambient.upper - ambient.lower).norm();
                    Vector t(s.basis.cols());
                    for (Eigen::Index i = 0; i < t.size(); ++i) {
                        const double lo = std::max(s.lower[i], -R);
                        const double hi = std::min(s.upper[i], R);
                        t[i] = lo + (hi - lo) * U(rng);
                    }
                    return s.base + s.basis * t;
                },
                [&](const GraphShape& s) -> Vector {
                    const Eigen::Index k = s.lower.size();
                    Vector a(k);
                    for (Eigen::Index i = 0; i < k; ++i) {
                        const double lo = std::max(s.lower[i], ambient.lower[i]);
                        const double hi = std::min(s.upper[i], ambient.upper[i]);
                        a[i] = lo + (hi - lo) * U(rng);
                    }
                    Vector out(n);
                    out.head(k) = a;
                    out.tail(n - k) = s.xi(a);
                    return out;
                },
                [&](const SphereShape& s) -> Vector {
                    std::normal_distribution<double> N(0.0, 1.0);
                    Vector u(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                        u[i] = N(rng);
                    return s.center + s.radius * u.normalized();
                },
                [&](const RegionShape&) -> Vector {
                    Vector u(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                        u[i] = ambient.lower[i] + (ambient.upper[i] - ambient.lower[i]) * U(rng);
                    return u;
                }},
            M.shape);
        if (in_box(y) && (std::holds_alternative<PointShape>(M.shape) || contains(M, y, 0.0)))
            return y;
    }
    throw InvalidStratification("could not sample stratum " + std::to_string(M.id) +
                                " inside the ambient box");
}

bool ValidationReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ValidationReport validate_stratification(const Stratification& S, int samples,
                                         unsigned long long seed)
{
    ValidationReport rep;
    const int n = S.ambient_dim();
    std::mt19937_64 rng(seed);

    CheckResult shapes{"shapes", true, 0.0, ""};
    for (const auto& M : S.strata()) {
        int expected = -1;
        if (std::holds_alternative<PointShape>(M.shape))
            expected = 0;
        else if (const auto* a = std::get_if<AffineShape>(&M.shape)) {
            expected = static_cast<int>(a->basis.cols());
            const Matrix I = Matrix::Identity(a->basis.cols(), a->basis.cols());
            const double err = (a->basis.transpose() * a->basis - I).norm();
            shapes.worst_margin = std::max(shapes.worst_margin, err);
            if (err > 1e-10) {
                shapes.passed = false;
                shapes.detail += "stratum " + std::to_string(M.id) + " basis not orthonormal; ";
            }
        } else if (const auto* g = std::get_if<GraphShape>(&M.shape))
            expected = static_cast<int>(g->lower.size());
        else if (std::holds_alternative<SphereShape>(M.shape))
            expected = n - 1;
        else
            expected = n;
        if (expected != M.dim) {
            shapes.passed = false;
            shapes.detail += "stratum " + std::to_string(M.id) + " dimension mismatch; ";
        }
        for (int j : M.frontier)
            if (S.at(j).dim >= M.dim) {
                shapes.passed = false;
                shapes.detail += "stratum " + std::to_string(M.id) +
                                 " lists a frontier stratum of no lower dimension; ";
            }
    }
    rep.checks.push_back(shapes);

    std::vector<std::vector<Vector>> pts(S.size());
    for (const auto& M : S.strata())
        for (int s = 0; s < samples; ++s)
            pts[M.id].push_back(sample(M, S.box(), rng));

    CheckResult disjoint{"disjoint", true, kInf, ""};
    for (const auto& Mi : S.strata())
        for (const auto& Mj : S.strata()) {
            if (Mi.id == Mj.id)
                continue;
            for (const auto& y : pts[Mi.id]) {
                bool hit = false;
                if (Mi.dim == Mj.dim) {
                    const double d = distance(S, Mj.id, y);
                    disjoint.worst_margin = std::min(disjoint.worst_margin, d);
                    hit = d <= 1e-9;
                } else {
                    hit = contains(Mj, y, 1e-9);
                }
                if (hit) {
                    disjoint.passed = false;
                    disjoint.detail += "sample of stratum " + std::to_string(Mi.id) +
                                       " lies in stratum " + std::to_string(Mj.id) + "; ";
                    break;
                }
            }
        }
    rep.checks.push_back(disjoint);

    CheckResult frontier{"frontier", true, 0.0, ""};
    for (const auto& Mi : S.strata()) {
        const auto fr = S.frontier_closure(Mi.id);
        for (const auto& Mj : S.strata()) {
            if (Mi.id == Mj.id || Mj.dim >= Mi.dim)
                continue;
            int close = 0;
            double far = 0.0;
            for (const auto& y : pts[Mj.id]) {
                const double d = distance(S, Mi.id, y);
                if (d <= 1e-6)
                    ++close;
                far = std::max(far, d);
            }
            const bool declared = std::find(fr.begin(), fr.end(), Mj.id) != fr.end();
            const int total = static_cast<int>(pts[Mj.id].size());
            std::string why;
            if (close > 0 && close < total)
                why = "closure meets but does not contain";
            else if (close == total && !declared)
                why = "contained in closure but not declared";
            else if (close == 0 && declared)
                why = "declared but not in closure";
            if (!why.empty()) {
                frontier.passed = false;
                frontier.worst_margin = std::max(frontier.worst_margin, far);
                frontier.detail += "stratum " + std::to_string(Mj.id) + " vs closure of " +
                                   std::to_string(Mi.id) + ": " + why + "; ";
            }
        }
    }
    rep.checks.push_back(frontier);

    CheckResult cover{"cover", true, 0.0, ""};
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int bad = 0;
    for (int s = 0; s < samples; ++s) {
        Vector x(n);
        for (int i = 0; i < n; ++i)
            x[i] = S.box().lower[i] + (S.box().upper[i] - S.box().lower[i]) * U(rng);
        int hits = 0;
        for (const auto& M : S.strata())
            if (M.dim == n && contains(M, x, 0.0))
                ++hits;
        if (hits == 1)
            continue;
        bool near_lower = false;
        for (const auto& M : S.strata())
            if (M.dim < n && distance(S, M.id, x) <= 1e-9)
                near_lower = true;
        if (!near_lower)
            ++bad;
    }
    cover.worst_margin = bad;
    if (bad > 0) {
        cover.passed = false;
        cover.detail = std::to_string(bad) + " ambient samples not in exactly one open stratum";
    }
    rep.checks.push_back(cover);
    return rep;
}

WConditionFit estimate_w_constants(const Stratification& S, int i, int j, int samples,
                                   unsigned long long seed, double C_cap)
{
    const auto fr = S.frontier_closure(i);
    if (std::find(fr.begin(), fr.end(), j) == fr.end())
        throw std::invalid_argument("stratum " + std::to_string(j) + " is not in the frontier of " +
                                    std::to_string(i));
    const Stratum& Mi = S.at(i);
    const Stratum& Mj = S.at(j);
    std::mt19937_64 rng(seed);

    std::vector<double> ratio, dist, front;
    for (int s = 0; s < samples; ++s) {
        const Vector x = sample(Mi, S.box(), rng);
        Vector y;
        try {
            y = project(S, j, x);
        } catch (const OutsideTube&) {
            continue;
        }
        const double dxy = (x - y).norm();
        const double dfr = distance_to_frontier(S, j, y);
        if (dxy <= 1e-12 || dfr <= 1e-12)
            continue;
        const Matrix A = normal_projector(Mi, x) * tangent_projector(Mj, y);
        const double r = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
        ratio.push_back(r);
        dist.push_back(dxy);
        front.push_back(dfr);
    }
    if (ratio.size() < 10)
        throw NoSamplePairs("only " + std::to_string(ratio.size()) + " usable sample pairs");

    auto C_of = [&](double eta) {
        double C = 0.0;
        for (size_t s = 0; s < ratio.size(); ++s)
            C = std::max(C, ratio[s] * std::pow(front[s], eta) / dist[s]);
        return C;
    };

    WConditionFit fit;
    fit.pairs = static_cast<int>(ratio.size());
    double eta = -1.0;
    for (int g = 0; g <= 16; ++g) {
        const double e = 0.25 * g;
        if (C_of(e) <= C_cap) {
            eta = e;
            break;
        }
    }
    if (eta < 0) {
        fit.within_cap = false;
        fit.eta = 4.0;
    } else {
        fit.eta = eta;
        for (int g = 1; g < 10 && eta > 0; ++g) {
            const double e = eta - 0.25 + 0.025 * g;
            if (C_of(e) <= C_cap) {
                fit.eta = e;
                break;
            }
        }
    }
    fit.C = C_of(fit.eta);
    fit.max_violation = -kInf;
    for (size_t s = 0; s < ratio.size(); ++s)
        fit.max_violation = std::max(
            fit.max_violation, ratio[s] - fit.C / std::pow(front[s], fit.eta) * dist[s]);
    return fit;
}

ExponentAssignment assign_exponents(const Stratification& S, double theta,
                                    const std::map<int, double>& eta, double floor)
{
    if (!(theta >= 0.0 && theta < 1.0))
        throw std::invalid_argument("theta must lie in [0, 1)");
    const int T = S.size();
    std::vector<int> height(T, -1);
    std::function<int(int)> h_of = [&](int id) {
        if (height[id] >= 0)
            return height[id];
        int h = 0;
        for (int j : S.frontier_closure(id))
            h = std::max(h, h_of(j) + 1);
        return height[id] = h;
    };
    int D = 0;
    for (int id = 0; id < T; ++id)
        D = std::max(D, h_of(id) + 1);

    auto eta_of = [&](int id) {
        auto it = eta.find(id);
        const double e = it == eta.end() ? 1.0 : it->second;
        if (e < 1.0)
            throw std::invalid_argument("eta must be at least 1");
        return e;
    };
    std::vector<double> eta_h(D, 1.0);
    for (int id = 0; id < T; ++id)
        eta_h[height[id]] = std::max(eta_h[height[id]], eta_of(id));

    // Room left above level h: the remaining levels each need a factor
    // 1/(1-theta) between beta and gamma and a factor eta between a gamma
    // and the next beta.
    auto room = [&](int levels_after, int h) {
        double r = std::pow(1.0 - theta, levels_after);
        for (int l = h + 1; l < D; ++l)
            r /= eta_h[l];
        return r;
    };

    std::vector<double> beta_h(D), gamma_h(D);
    for (int h = 0; h < D; ++h) {
        const double lo = h == 0 ? 0.0 : eta_h[h] * gamma_h[h - 1];
        const double hi = room(D - h, h);
        beta_h[h] = 0.5 * (lo + hi);
        const double glo = beta_h[h] / (1.0 - theta);
        const double ghi = room(D - 1 - h, h);
        gamma_h[h] = 0.5 * (glo + ghi);
    }
    if (D > 0 && beta_h[0] < floor) {
        // Report the longest chain.
        int top = 0;
        for (int id = 0; id < T; ++id)
            if (height[id] > height[top])
                top = id;
        std::string chain = std::to_string(top);
        int cur = top;
        while (height[cur] > 0) {
            for (int j : S.frontier_closure(cur))
                if (height[j] == height[cur] - 1) {
                    cur = j;
                    break;
                }
            chain = std::to_string(cur) + " < " + chain;
        }
        throw InfeasibleExponents("theta = " + std::to_string(theta) + " leaves no room for a " +
                                  std::to_string(D) + "-level chain (" + chain +
                                  "): smallest exponent would be " + std::to_string(beta_h[0]));
    }

    ExponentAssignment out;
    out.theta = theta;
    double gmin = kInf;
    for (int id = 0; id < T; ++id) {
        StratumExponents e;
        e.beta = beta_h[height[id]];
        e.gamma = gamma_h[height[id]];
        e.eta = eta_of(id);
        double sup_gamma = 0.0;
        for (int j : S.frontier_closure(id))
            sup_gamma = std::max(sup_gamma, gamma_h[height[j]]);
        e.omega = e.eta * sup_gamma;
        gmin = std::min(gmin, std::min(e.beta - e.omega, 2.0 - e.omega));
        out.per_stratum[id] = e;
    }
    out.beta = 0.5 * gmin;
    return out;
}

} // namespace sg
