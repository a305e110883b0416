#include "subgrad/cells.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace sg {

int LRegularCell::ambient_dim() const
{
    switch (kind) {
    case CellKind::Interval:
    case CellKind::Singleton:
        return 1;
    default:
        return base->ambient_dim() + 1;
    }
}

int LRegularCell::dim() const
{
    switch (kind) {
    case CellKind::Interval: return 1;
    case CellKind::Singleton: return 0;
    case CellKind::Graph: return base->dim();
    case CellKind::Band: return base->dim() + 1;
    }
    return 0;
}

namespace cells {

LRegularCell interval(double a, double b)
{
    if (!(a < b))
        throw InvalidCell("interval needs a < b");
    LRegularCell c;
    c.kind = CellKind::Interval;
    c.a = a;
    c.b = b;
    return c;
}

LRegularCell singleton(double p)
{
    LRegularCell c;
    c.kind = CellKind::Singleton;
    c.a = c.b = p;
    return c;
}

static void check_lift(const LRegularCell& base, const Polynomial& p)
{
    if (base.ambient_dim() + 1 > kMaxCellDim)
        throw InvalidCell("cell dimension cap is " + std::to_string(kMaxCellDim));
    if (p.nvars() != base.ambient_dim())
        throw DimensionMismatch("cell map has wrong variable count");
}

LRegularCell graph(const LRegularCell& base, Polynomial xi, double L0)
{
    check_lift(base, xi);
    LRegularCell c;
    c.kind = CellKind::Graph;
    c.base = std::make_shared<const LRegularCell>(base);
    c.lo = std::move(xi);
    c.L0 = L0;
    return c;
}

LRegularCell band(const LRegularCell& base, Polynomial lower, Polynomial upper, double L0)
{
    check_lift(base, lower);
    check_lift(base, upper);
    LRegularCell c;
    c.kind = CellKind::Band;
    c.base = std::make_shared<const LRegularCell>(base);
    c.lo = std::move(lower);
    c.hi = std::move(upper);
    c.L0 = L0;
    return c;
}

} // namespace cells

bool contains(const LRegularCell& C, const Vector& x, double tol)
{
    if (x.size() != C.ambient_dim())
        throw DimensionMismatch("point dimension does not match cell");
    switch (C.kind) {
    case CellKind::Interval:
        return C.a < x[0] && x[0] < C.b;
    case CellKind::Singleton:
        return std::abs(x[0] - C.a) <= tol;
    default:
        break;
    }
    const Vector xb = x.head(x.size() - 1);
    if (!contains(*C.base, xb, tol))
        return false;
    const double h = x[x.size() - 1];
    if (C.kind == CellKind::Graph)
        return std::abs(h - C.lo(xb)) <= tol;
    return C.lo(xb) < h && h < C.hi(xb);
}

Vector sample(const LRegularCell& C, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    switch (C.kind) {
    case CellKind::Interval: {
        double u = 0.0;
        do
            u = U(rng);
        while (u == 0.0);
        return Vector::Constant(1, C.a + (C.b - C.a) * u);
    }
    case CellKind::Singleton:
        return Vector::Constant(1, C.a);
    default:
        break;
    }
    const Vector xb = sample(*C.base, rng);
    Vector x(xb.size() + 1);
    x.head(xb.size()) = xb;
    if (C.kind == CellKind::Graph) {
        x[xb.size()] = C.lo(xb);
    } else {
        const double l = C.lo(xb), h = C.hi(xb);
        double u = 0.0;
        do
            u = U(rng);
        while (u == 0.0);
        x[xb.size()] = l + (h - l) * u;
    }
    return x;
}

namespace {

// Image of [0,1]^dim under map.
struct ParamPatch {
    int dim = 0;
    std::function<Vector(const Vector&)> map;
};

ParamPatch lift(const ParamPatch& P, const Polynomial& xi)
{
    return {P.dim, [m = P.map, xi](const Vector& q) {
                const Vector y = m(q);
                Vector out(y.size() + 1);
                out.head(y.size()) = y;
                out[y.size()] = xi(y);
                return out;
            }};
}

// (base point, s) -> (base point, lo + s (hi - lo))
ParamPatch sweep(const ParamPatch& P, const Polynomial& lo, const Polynomial& hi)
{
    return {P.dim + 1, [m = P.map, lo, hi, d = P.dim](const Vector& q) {
                const Vector y = m(q.head(d));
                const double s = q[d];
                Vector out(y.size() + 1);
                out.head(y.size()) = y;
                const double l = lo(y);
                out[y.size()] = l + s * (hi(y) - l);
                return out;
            }};
}

ParamPatch closure_param(const LRegularCell& C)
{
    switch (C.kind) {
    case CellKind::Interval:
        return {1, [a = C.a, b = C.b](const Vector& q) {
                    return Vector::Constant(1, a + q[0] * (b - a)).eval();
                }};
    case CellKind::Singleton:
        return {0, [p = C.a](const Vector&) { return Vector::Constant(1, p).eval(); }};
    case CellKind::Graph:
        return lift(closure_param(*C.base), C.lo);
    case CellKind::Band:
        return sweep(closure_param(*C.base), C.lo, C.hi);
    }
    return {};
}

std::vector<ParamPatch> frontier_params(const LRegularCell& C)
{
    std::vector<ParamPatch> out;
    switch (C.kind) {
    case CellKind::Interval:
        out.push_back({0, [a = C.a](const Vector&) { return Vector::Constant(1, a).eval(); }});
        out.push_back({0, [b = C.b](const Vector&) { return Vector::Constant(1, b).eval(); }});
        break;
    case CellKind::Singleton:
        break;
    case CellKind::Graph:
        for (const auto& P : frontier_params(*C.base))
            out.push_back(lift(P, C.lo));
        break;
    case CellKind::Band: {
        const ParamPatch cl = closure_param(*C.base);
        out.push_back(lift(cl, C.lo));
        out.push_back(lift(cl, C.hi));
        for (const auto& P : frontier_params(*C.base))
            out.push_back(sweep(P, C.lo, C.hi));
        break;
    }
    }
    return out;
}

double patch_distance(const ParamPatch& P, const Vector& x)
{
    if (P.dim == 0)
        return (P.map(Vector()) - x).norm();
    const int d = P.dim;
    const int res = d == 1 ? 64 : 20;
    Vector best_q(d);
    double best = kInf;
    Vector q(d);
    std::vector<int> idx(d, 0);
    for (;;) {
        for (int i = 0; i < d; ++i)
            q[i] = static_cast<double>(idx[i]) / res;
        const double v = (P.map(q) - x).squaredNorm();
        if (v < best) {
            best = v;
            best_q = q;
        }
        int i = 0;
        while (i < d && ++idx[i] > res)
            idx[i++] = 0;
        if (i == d)
            break;
    }
    // Projected Gauss-Newton refinement with a forward-difference Jacobian.
    q = best_q;
    const double h = 1e-7;
    for (int it = 0; it < 40; ++it) {
        const Vector r = P.map(q) - x;
        Matrix J(r.size(), d);
        for (int i = 0; i < d; ++i) {
            Vector qh = q;
            const double step = q[i] + h <= 1.0 ? h : -h;
            qh[i] += step;
            J.col(i) = (P.map(qh) - P.map(q)) / step;
        }
        const Matrix A = J.transpose() * J + 1e-12 * Matrix::Identity(d, d);
        const Vector dq = -A.ldlt().solve(J.transpose() * r);
        double s = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Vector qn = (q + s * dq).cwiseMax(0.0).cwiseMin(1.0);
            const double v = (P.map(qn) - x).squaredNorm();
            if (v < best) {
                moved = (qn - q).norm() > 1e-15;
                best = v;
                q = qn;
                break;
            }
            s *= 0.5;
        }
        if (!moved)
            break;
    }
    return std::sqrt(best);
}

double hypot_factor(double L0) { return std::sqrt(2.0 + L0 * L0); }

} // namespace

double frontier_distance(const LRegularCell& C, const Vector& x)
{
    if (x.size() != C.ambient_dim())
        throw DimensionMismatch("point dimension does not match cell");
    double d = kInf;
    for (const auto& P : frontier_params(C))
        d = std::min(d, patch_distance(P, x));
    return d;
}

ValidationReport validate_cell(const LRegularCell& C, int samples, unsigned long long seed)
{
    ValidationReport rep;
    std::mt19937_64 rng(seed);
    std::function<void(const LRegularCell&)> walk = [&](const LRegularCell& c) {
        if (c.kind == CellKind::Interval || c.kind == CellKind::Singleton)
            return;
        walk(*c.base);
        CheckResult lip{"lipschitz", true, 0.0, ""};
        CheckResult order{"band_order", true, kInf, ""};
        for (int s = 0; s < samples; ++s) {
            const Vector u = sample(*c.base, rng);
            const Vector v = sample(*c.base, rng);
            const double duv = (u - v).norm();
            for (const Polynomial* p : {&c.lo, &c.hi}) {
                if (c.kind == CellKind::Graph && p == &c.hi)
                    continue;
                if (duv > 1e-12) {
                    const double q = std::abs((*p)(u) - (*p)(v)) / duv;
                    lip.worst_margin = std::max(lip.worst_margin, q - c.L0);
                    if (q > c.L0 * (1.0 + 1e-9))
                        lip.passed = false;
                }
            }
            if (c.kind == CellKind::Band) {
                const double gap = c.hi(u) - c.lo(u);
                order.worst_margin = std::min(order.worst_margin, gap);
                if (!(gap > 0.0))
                    order.passed = false;
            }
        }
        rep.checks.push_back(lip);
        if (c.kind == CellKind::Band)
            rep.checks.push_back(order);
    };
    walk(C);
    return rep;
}

double ShrunkenCell::margin() const { return rho * std::pow(t, theta); }

ShrunkenCell shrink_cell(const LRegularCell& C, double t, const ShrinkParams& params)
{
    if (!(t > 0.0 && t <= 1.0))
        throw std::invalid_argument("shrink parameter t must lie in (0, 1]");
    ShrunkenCell out;
    out.t = t;
    switch (C.kind) {
    case CellKind::Interval:
        if (!(C.a + t < C.b - t))
            throw DegenerateCell("interval (" + std::to_string(C.a) + ", " + std::to_string(C.b) +
                                 ") is empty after shrinking by " + std::to_string(t));
        out.cell = cells::interval(C.a + t, C.b - t);
        out.rho = 1.0;
        out.theta = 1.0;
        return out;
    case CellKind::Singleton:
        out.cell = C;
        out.rho = 1.0;
        out.theta = 1.0;
        return out;
    default:
        break;
    }
    const double s = hypot_factor(C.L0);
    const ShrunkenCell sub = shrink_cell(*C.base, t / s, params);
    if (C.kind == CellKind::Graph) {
        out.cell = cells::graph(sub.cell, C.lo, C.L0);
        out.theta = sub.theta;
        out.rho = sub.rho * std::pow(s, -sub.theta);
        return out;
    }
    const double kappa = params.kappa;
    const double beta = 0.5 * params.c * std::pow(sub.rho, kappa) * std::pow(t / s, sub.theta * kappa);
    if (!(beta < t))
        throw InvalidCell("band margin " + std::to_string(beta) + " is not below t = " +
                          std::to_string(t) + "; reduce c");
    // The shrunken band must stay nonempty over the shrunken base.
    std::mt19937_64 rng(7);
    for (int i = 0; i < 512; ++i) {
        const Vector u = sample(sub.cell, rng);
        if (!(C.hi(u) - C.lo(u) > 2.0 * beta))
            throw DegenerateCell("band becomes empty after shrinking: width " +
                                 std::to_string(C.hi(u) - C.lo(u)) + " <= 2 beta = " +
                                 std::to_string(2.0 * beta));
    }
    out.beta = beta;
    out.cell = cells::band(sub.cell, C.lo + Polynomial::constant(C.lo.nvars(), beta),
                           C.hi - Polynomial::constant(C.hi.nvars(), beta), C.L0);
    out.theta = sub.theta * kappa;
    const double band_term =
        params.margin_scale * params.c * std::pow(sub.rho, kappa) / (2.0 * std::sqrt(1.0 + C.L0 * C.L0));
    out.rho = std::min(band_term, sub.rho) * std::pow(s, -out.theta);
    return out;
}

InclusionReport verify_inclusions(const LRegularCell& C, const ShrunkenCell& Mt, int samples,
                                  unsigned long long seed)
{
    InclusionReport rep;
    rep.samples = samples;
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        const Vector x = sample(C, rng);
        const double d = frontier_distance(C, x);
        if (d > Mt.t) {
            ++rep.left_checked;
            if (!contains(Mt.cell, x)) {
                ++rep.left_violations;
                rep.worst_left = std::max(rep.worst_left, d - Mt.t);
            }
        }
    }
    const double m = Mt.margin();
    for (int s = 0; s < samples; ++s) {
        const Vector x = sample(Mt.cell, rng);
        const double d = contains(C, x) ? frontier_distance(C, x) : -kInf;
        if (!(d > m)) {
            ++rep.right_violations;
            rep.worst_right = std::max(rep.worst_right, std::isfinite(d) ? m - d : kInf);
        }
    }
    return rep;
}

QuasiconvexityEstimate quasiconvexity_estimate(const LRegularCell& C, int samples,
                                               unsigned long long seed, int k)
{
    std::mt19937_64 rng(seed);
    const int N = samples;
    std::vector<Vector> pts;
    pts.reserve(N);
    for (int i = 0; i < N; ++i)
        pts.push_back(sample(C, rng));
    const bool full = C.dim() == C.ambient_dim();

    auto visible = [&](const Vector& p, const Vector& q) {
        if (!full)
            return true;
        for (int s = 1; s < 32; ++s)
            if (!contains(C, Vector(p + (q - p) * (s / 32.0)), 0.0))
                return false;
        return true;
    };

    // Full-dimensional cells: every mutually visible pair is an edge, so a
    // convex cell gives C = 1 up to sampling. Lower-dimensional cells: the k
    // nearest neighbours, which keeps paths on the cell.
    std::vector<std::vector<std::pair<int, double>>> adj(N);
    int edges = 0;
    const int kk = full ? N - 1 : std::min(k, N - 1);
    for (int i = 0; i < N; ++i) {
        std::vector<std::pair<double, int>> nb;
        for (int j = 0; j < N; ++j)
            if (j != i)
                nb.emplace_back((pts[i] - pts[j]).norm(), j);
        std::partial_sort(nb.begin(), nb.begin() + kk, nb.end());
        for (int r = 0; r < kk; ++r) {
            const int j = nb[r].second;
            if (full && j < i)
                continue; // pair already tested from j
            if (!visible(pts[i], pts[j]))
                continue;
            adj[i].emplace_back(j, nb[r].first);
            adj[j].emplace_back(i, nb[r].first);
            ++edges;
        }
    }

    QuasiconvexityEstimate out;
    out.nodes = N;
    out.edges = edges;
    out.C = 1.0;
    std::vector<double> dist(N);
    for (int src = 0; src < N; ++src) {
        std::fill(dist.begin(), dist.end(), kInf);
        dist[src] = 0.0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.emplace(0.0, src);
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u])
                continue;
            for (auto [v, w] : adj[u])
                if (d + w < dist[v]) {
                    dist[v] = d + w;
                    pq.emplace(dist[v], v);
                }
        }
        for (int j = 0; j < N; ++j) {
            if (!std::isfinite(dist[j]))
                throw DisconnectedSample("neighbour graph is disconnected; raise the sample count");
            const double e = (pts[src] - pts[j]).norm();
            if (e > 1e-12)
                out.C = std::max(out.C, dist[j] / e);
        }
    }
    return out;
}

} // namespace sg
