#include "subgrad/engine.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace sg {

StepSchedule StepSchedule::constant(double c)
{
    StepSchedule s;
    s.kind = ScheduleKind::Constant;
    s.c = c;
    return s;
}

StepSchedule StepSchedule::harmonic(double c, double k0)
{
    StepSchedule s;
    s.kind = ScheduleKind::Harmonic;
    s.c = c;
    s.k0 = k0;
    return s;
}

StepSchedule StepSchedule::power(double c, double p, double k0)
{
    StepSchedule s;
    s.kind = ScheduleKind::Power;
    s.c = c;
    s.p = p;
    s.k0 = k0;
    return s;
}

StepSchedule StepSchedule::from_table(std::vector<double> values)
{
    StepSchedule s;
    s.kind = ScheduleKind::Table;
    s.table = std::move(values);
    return s;
}

double StepSchedule::operator()(long k) const
{
    if (k < 0)
        throw std::out_of_range("negative step index");
    double a = 0.0;
    switch (kind) {
    case ScheduleKind::Constant:
        a = c;
        break;
    case ScheduleKind::Harmonic:
        a = c / (static_cast<double>(k) + k0);
        break;
    case ScheduleKind::Power:
        a = c / std::pow(static_cast<double>(k) + k0, p);
        break;
    case ScheduleKind::Table:
        if (k >= static_cast<long>(table.size()))
            throw std::out_of_range("step table has only " + std::to_string(table.size()) +
                                    " entries");
        a = table[k];
        break;
    }
    if (!(a > 0.0) || !std::isfinite(a))
        throw InvalidSchedule("step " + std::to_string(k) + " is not a positive number");
    return a;
}

std::vector<double> StepSchedule::first(long K) const
{
    std::vector<double> out(K);
    for (long k = 0; k < K; ++k)
        out[k] = (*this)(k);
    return out;
}

bool StepSchedule::nonincreasing(long K) const
{
    switch (kind) {
    case ScheduleKind::Constant:
        return true;
    case ScheduleKind::Harmonic:
        return c > 0 && k0 > 0;
    case ScheduleKind::Power:
        return c > 0 && k0 > 0 && p >= 0;
    case ScheduleKind::Table:
        for (long k = 0; k + 1 < K && k + 1 < static_cast<long>(table.size()); ++k)
            if (table[k + 1] > table[k])
                return false;
        return true;
    }
    return false;
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v)
{
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

std::string StepSchedule::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case ScheduleKind::Constant:
        os << "constant:" << shortest(c);
        break;
    case ScheduleKind::Harmonic:
        os << "harmonic:" << shortest(c) << "," << shortest(k0);
        break;
    case ScheduleKind::Power:
        os << "power:" << shortest(c) << "," << shortest(p) << "," << shortest(k0);
        break;
    case ScheduleKind::Table:
        os << "table:";
        for (size_t i = 0; i < table.size(); ++i)
            os << (i ? "," : "") << shortest(table[i]);
        break;
    }
    return os.str();
}

StepSchedule parse_schedule(const std::string& s)
{
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(s.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                size_t used = 0;
                args.push_back(std::stod(tok, &used));
                if (used != tok.size())
                    throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw InvalidSchedule("bad number '" + tok + "' in schedule '" + s + "'");
            }
        }
    }
    auto need = [&](size_t lo, size_t hi) {
        if (args.size() < lo || args.size() > hi)
            throw InvalidSchedule("schedule '" + s + "' has the wrong number of arguments");
    };
    if (kind == "constant") {
        need(1, 1);
        return StepSchedule::constant(args[0]);
    }
    if (kind == "harmonic") {
        need(1, 2);
        return StepSchedule::harmonic(args[0], args.size() > 1 ? args[1] : 1.0);
    }
    if (kind == "power") {
        need(2, 3);
        return StepSchedule::power(args[0], args[1], args.size() > 2 ? args[2] : 1.0);
    }
    if (kind == "table") {
        need(1, static_cast<size_t>(-1));
        return StepSchedule::from_table(args);
    }
    throw InvalidSchedule("unknown schedule kind '" + kind + "'");
}

Trajectory prefix(const Trajectory& tr, long k)
{
    if (k < 0 || k > tr.K())
        throw std::out_of_range("prefix length " + std::to_string(k) + " outside [0, " +
                                std::to_string(tr.K()) + "]");
    Trajectory p = tr;
    p.points = tr.points.leftCols(k + 1);
    p.subgradients = tr.subgradients.leftCols(k);
    p.steps = tr.steps.head(k);
    p.values = tr.values.head(k + 1);
    p.next_step = k < tr.K() ? tr.steps[k] : tr.next_step;
    p.requested = k;
    p.truncated = false;
    return p;
}

Vector subgradient_step(const Vector& x, double alpha, const Vector& v)
{
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out[i] = x[i] - alpha * v[i];
    return out;
}

Trajectory run(const PiecewiseFunction& f, const Vector& x0, const StepSchedule& schedule,
               Policy policy, long K, unsigned long long seed)
{
    if (K < 1)
        throw std::invalid_argument("K must be at least 1");
    if (x0.size() != f.dim())
        throw DimensionMismatch("starting point has the wrong dimension");
    if (!f.box().contains(x0))
        throw DomainError("starting point lies outside the function box");

    const Eigen::Index n = x0.size();
    Trajectory tr;
    tr.policy = policy;
    tr.seed = seed;
    tr.requested = K;
    tr.points.resize(n, K + 1);
    tr.subgradients.resize(n, K);
    tr.steps.resize(K);
    tr.values.resize(K + 1);
    tr.points.col(0) = x0;
    tr.values[0] = evaluate(f, x0);

    std::mt19937_64 rng(seed);
    long k = 0;
    for (; k < K; ++k) {
        const Vector xk = tr.points.col(k);
        const Matrix G = clarke_subdifferential(f, xk);
        const Vector v = select_subgradient(G, policy, rng);
        const double a = schedule(k);
        const Vector next = subgradient_step(xk, a, v);
        if (!f.box().contains(next)) {
            tr.truncated = true;
            break;
        }
        tr.subgradients.col(k) = v;
        tr.steps[k] = a;
        tr.points.col(k + 1) = next;
        tr.values[k + 1] = evaluate(f, next);
    }
    if (tr.truncated) {
        tr.points.conservativeResize(n, k + 1);
        tr.subgradients.conservativeResize(n, k);
        tr.steps.conservativeResize(k);
        tr.values.conservativeResize(k + 1);
    }
    try {
        tr.next_step = schedule(k);
    } catch (const std::out_of_range&) {
        tr.next_step = k > 0 ? tr.steps[k - 1] : schedule(0);
    }
    return tr;
}

namespace {

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; returns column indices of strict hull vertices.
std::vector<Eigen::Index> hull_indices(const Matrix& pts)
{
    const Eigen::Index m = pts.cols();
    std::vector<Eigen::Index> idx(m);
    for (Eigen::Index i = 0; i < m; ++i)
        idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return pts(0, a) < pts(0, b) || (pts(0, a) == pts(0, b) && pts(1, a) < pts(1, b));
    });
    if (m < 3)
        return idx;
    std::vector<Eigen::Index> h(2 * m);
    size_t t = 0;
    auto P = [&](Eigen::Index i) { return Eigen::Vector2d(pts(0, i), pts(1, i)); };
    for (Eigen::Index i = 0; i < m; ++i) {
        while (t >= 2 && cross2(P(h[t - 2]), P(h[t - 1]), P(idx[i])) <= 0)
            --t;
        h[t++] = idx[i];
    }
    const size_t lower = t + 1;
    for (Eigen::Index i = m - 1; i-- > 0;) {
        while (t >= lower && cross2(P(h[t - 2]), P(h[t - 1]), P(idx[i])) <= 0)
            --t;
        h[t++] = idx[i];
    }
    h.resize(t > 1 ? t - 1 : t);
    return h;
}

// Incrementally maintained convex polygon (counter-clockwise).
class Hull2 {
public:
    const std::vector<Eigen::Vector2d>& vertices() const { return v_; }

    void insert(const Eigen::Vector2d& p)
    {
        if (v_.empty()) {
            v_.push_back(p);
            return;
        }
        if (v_.size() == 1) {
            if (p != v_[0])
                v_.push_back(p);
            return;
        }
        if (v_.size() == 2) {
            const double c = cross2(v_[0], v_[1], p);
            if (c == 0.0) {
                std::array<Eigen::Vector2d, 3> q{v_[0], v_[1], p};
                double best = -1;
                std::pair<int, int> pr{0, 1};
                for (int i = 0; i < 3; ++i)
                    for (int j = i + 1; j < 3; ++j)
                        if ((q[i] - q[j]).squaredNorm() > best) {
                            best = (q[i] - q[j]).squaredNorm();
                            pr = {i, j};
                        }
                v_ = {q[pr.first], q[pr.second]};
            } else if (c > 0.0) {
                v_ = {v_[0], v_[1], p};
            } else {
                v_ = {v_[0], p, v_[1]};
            }
            return;
        }
        const size_t m = v_.size();
        std::vector<char> vis(m);
        bool any = false;
        for (size_t i = 0; i < m; ++i) {
            vis[i] = cross2(v_[i], v_[(i + 1) % m], p) < 0.0;
            any = any || vis[i];
        }
        if (!any)
            return;
        size_t start = 0;
        while (!(vis[start] && !vis[(start + m - 1) % m])) {
            if (++start == m)
                return; // every edge visible; cannot happen for a proper polygon
        }
        size_t len = 0;
        while (len < m && vis[(start + len) % m])
            ++len;
        std::vector<Eigen::Vector2d> nv;
        nv.reserve(m + 1);
        for (size_t i = (start + len) % m;; i = (i + 1) % m) {
            nv.push_back(v_[i]);
            if (i == start)
                break;
        }
        nv.push_back(p);
        v_ = std::move(nv);
    }

private:
    std::vector<Eigen::Vector2d> v_;
};

} // namespace

namespace detail {

double diameter_impl(const Matrix& pts)
{
    const Eigen::Index m = pts.cols();
    if (m < 2)
        return 0.0;
    const Eigen::Index n = pts.rows();
    if (n == 1) {
        Eigen::Index lo = 0, hi = 0;
        pts.row(0).minCoeff(&lo);
        pts.row(0).maxCoeff(&hi);
        return (pts.col(hi) - pts.col(lo)).norm();
    }
    if (n == 2) {
        const auto h = hull_indices(pts);
        double best = 0.0;
        for (size_t i = 0; i < h.size(); ++i)
            for (size_t j = i + 1; j < h.size(); ++j)
                best = std::max(best, (pts.col(h[i]) - pts.col(h[j])).norm());
        return best;
    }
    // Bounding-box prefilter: skip a point whose farthest box corner is no
    // farther than the best pair found so far.
    const Vector lo = pts.rowwise().minCoeff();
    const Vector hi = pts.rowwise().maxCoeff();
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector c = pts.col(i);
        const double reach = (c - lo).cwiseAbs().cwiseMax((hi - c).cwiseAbs()).norm();
        if (reach <= best)
            continue;
        for (Eigen::Index j = i + 1; j < m; ++j)
            best = std::max(best, (c - pts.col(j)).norm());
    }
    return best;
}

} // namespace detail

double diameter_reference(const Matrix& pts)
{
    double best = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        for (Eigen::Index j = i + 1; j < pts.cols(); ++j)
            best = std::max(best, (pts.col(i) - pts.col(j)).norm());
    return best;
}

double diameter(const Trajectory& tr, long a, long b)
{
    if (a < 0 || b > tr.K() || a > b)
        throw std::out_of_range("diameter: bad index range");
    return detail::diameter_impl(tr.points.middleCols(a, b - a + 1));
}

Vector tail_diameters(const Trajectory& tr)
{
    const long K = tr.K();
    const int n = tr.dim();
    Vector d(K + 1);
    d[K] = 0.0;
    if (n == 1) {
        double lo = tr.points(0, K), hi = lo;
        for (long k = K - 1; k >= 0; --k) {
            lo = std::min(lo, tr.points(0, k));
            hi = std::max(hi, tr.points(0, k));
            d[k] = hi - lo;
        }
        return d;
    }
    if (n == 2) {
        Hull2 hull;
        hull.insert(tr.points.col(K));
        for (long k = K - 1; k >= 0; --k) {
            const Eigen::Vector2d p = tr.points.col(k);
            double far = 0.0;
            for (const auto& v : hull.vertices())
                far = std::max(far, (p - v).norm());
            d[k] = std::max(d[k + 1], far);
            hull.insert(p);
        }
        return d;
    }
    Vector lo = tr.points.col(K), hi = lo;
    for (long k = K - 1; k >= 0; --k) {
        const Vector p = tr.points.col(k);
        const double reach = (p - lo).cwiseAbs().cwiseMax((hi - p).cwiseAbs()).norm();
        double best = d[k + 1];
        if (reach > best)
            for (long j = k + 1; j <= K; ++j)
                best = std::max(best, (p - tr.points.col(j)).norm());
        d[k] = best;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return d;
}

std::string to_string(Verdict::Kind k)
{
    switch (k) {
    case Verdict::Kind::ConvergedTo: return "converged";
    case Verdict::Kind::Oscillating: return "oscillating";
    case Verdict::Kind::Truncated: return "truncated";
    }
    return "?";
}

Verdict detect_convergence(const Trajectory& tr, double tol)
{
    Verdict v;
    const long K = tr.K();
    v.point = tr.x(K);
    v.window_start = K - std::max(1L, K / 10);
    if (v.window_start < 0)
        v.window_start = 0;
    v.amplitude = diameter(tr, v.window_start, K);
    if (tr.truncated)
        v.kind = Verdict::Kind::Truncated;
    else if (v.amplitude < tol)
        v.kind = Verdict::Kind::ConvergedTo;
    else
        v.kind = Verdict::Kind::Oscillating;
    return v;
}

bool critical_point_check(const PiecewiseFunction& f, const Vector& x, double tol,
                          double activity_tol)
{
    return min_norm_subgradient(clarke_subdifferential(f, x, activity_tol)).norm() <= tol;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(std::ostream& os, const PiecewiseFunction& f, const Trajectory& tr,
                     const TraceMeta& meta)
{
    const int n = tr.dim();
    os << "# schema=" << kTraceSchema << " columns=k,x_0";
    if (n > 1)
        os << "..x_" << (n - 1);
    os << ",f,alpha,vnorm,policy\n";
    os << "# benchmark=" << meta.benchmark << " config_hash=" << meta.config_hash
       << " seed=" << tr.seed << " function=" << f.name() << "\n";
    os << "# timestamp=" << meta.timestamp << "\n";
    os << "k";
    for (int i = 0; i < n; ++i)
        os << ",x_" << i;
    os << ",f,alpha,vnorm,policy\n";
    const std::string pol = to_string(tr.policy);
    for (long k = 0; k <= tr.K(); ++k) {
        os << k;
        for (int i = 0; i < n; ++i)
            os << ',' << format_double(tr.points(i, k));
        os << ',' << format_double(tr.values[k]);
        if (k < tr.K())
            os << ',' << format_double(tr.steps[k]) << ','
               << format_double(tr.subgradients.col(k).norm());
        else
            os << ",,";
        os << ',' << pol << '\n';
    }
}

} // namespace sg
