#include "subgrad/io_json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string exponent_key(const Exponents& e)
{
    std::string s;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i)
            s += ',';
        s += std::to_string(e[i]);
    }
    return s;
}

Exponents parse_key(const std::string& key, int nvars)
{
    Exponents e;
    std::stringstream ss(key);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &used);
        } catch (const std::exception&) {
            throw ConfigError("bad exponent key '" + key + "'");
        }
        if (used != tok.size() || v < 0)
            throw ConfigError("bad exponent key '" + key + "'");
        e.push_back(v);
    }
    if (static_cast<int>(e.size()) != nvars)
        throw ConfigError("exponent key '" + key + "' has " + std::to_string(e.size()) +
                          " entries, expected " + std::to_string(nvars));
    return e;
}

const Json& field(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(std::string("missing field '") + key + "'");
    return j.at(key);
}

double as_double(const Json& j)
{
    if (!j.is_number())
        throw ConfigError("expected a number, got " + j.dump());
    return j.get<double>();
}

std::vector<int> int_list(const Json& j)
{
    std::vector<int> out;
    for (const auto& v : j)
        out.push_back(v.get<int>());
    return out;
}

Json box_json(const Box& b) { return {{"lower", bounds_json(b.lower)}, {"upper", bounds_json(b.upper)}}; }

Box box_from(const Json& j)
{
    return Box{bounds_from(field(j, "lower"), -kInf), bounds_from(field(j, "upper"), kInf)};
}

Json double_map(const std::map<long, int>& m)
{
    Json out = Json::array();
    for (const auto& [k, v] : m)
        out.push_back({k, v});
    return out;
}

} // namespace

Json parse_json(const std::string& text, const std::string& source)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // Byte offset to line/column; the offset points one past the bad byte.
        const std::size_t pos = e.byte == 0 ? 0 : e.byte - 1;
        long line = 1, col = 1;
        for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        const auto cut = msg.find(": ");
        if (cut != std::string::npos)
            msg = msg.substr(cut + 2);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                          msg);
    }
}

Json load_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path);
}

Json number(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

Json vector_json(const Vector& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(number(v[i]));
    return out;
}

Vector vector_from(const Json& j)
{
    if (!j.is_array())
        throw ConfigError("expected an array of numbers, got " + j.dump());
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = as_double(j[i]);
    return v;
}

Json bounds_json(const Vector& v) { return vector_json(v); }

Vector bounds_from(const Json& j, double inf_value)
{
    if (!j.is_array())
        throw ConfigError("expected an array of bounds, got " + j.dump());
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j[i].is_null() ? inf_value : as_double(j[i]);
    return v;
}

Json polynomial_json(const Polynomial& p)
{
    Json out = Json::object();
    for (const auto& [e, c] : p.terms())
        out[exponent_key(e)] = c;
    return out;
}

Polynomial polynomial_from(const Json& j, int nvars)
{
    if (!j.is_object())
        throw ConfigError("polynomial must be an object of exponent keys, got " + j.dump());
    Polynomial p(nvars);
    for (const auto& [key, c] : j.items())
        p.add_term(parse_key(key, nvars), as_double(c));
    return p;
}

Json node_json(const Node& n)
{
    Json out = Json::array();
    switch (n.kind) {
    case NodeKind::Leaf:
        return {"leaf", n.leaf};
    case NodeKind::Max:
        out.push_back("max");
        break;
    case NodeKind::Min:
        out.push_back("min");
        break;
    case NodeKind::Sum:
        out.push_back("sum");
        break;
    case NodeKind::Scale:
        return {"scale", n.scale, node_json(n.children.at(0))};
    case NodeKind::Affine: {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < n.A.rows(); ++r)
            rows.push_back(vector_json(n.A.row(r).transpose()));
        return {"affine", rows, vector_json(n.b), node_json(n.children.at(0))};
    }
    }
    for (const auto& c : n.children)
        out.push_back(node_json(c));
    return out;
}

Node node_from(const Json& j)
{
    if (!j.is_array() || j.empty() || !j[0].is_string())
        throw ConfigError("expression must be [\"op\", ...], got " + j.dump());
    const std::string op = j[0].get<std::string>();
    auto children = [&](std::size_t from) {
        std::vector<Node> out;
        for (std::size_t i = from; i < j.size(); ++i)
            out.push_back(node_from(j[i]));
        return out;
    };
    if (op == "leaf") {
        if (j.size() != 2 || !j[1].is_number_integer())
            throw ConfigError("leaf expects one integer index");
        return expr::leaf(j[1].get<int>());
    }
    if (op == "max")
        return expr::max(children(1));
    if (op == "min")
        return expr::min(children(1));
    if (op == "sum")
        return expr::sum(children(1));
    if (op == "scale") {
        if (j.size() != 3)
            throw ConfigError("scale expects [\"scale\", c, child]");
        return expr::scale(as_double(j[1]), node_from(j[2]));
    }
    if (op == "affine") {
        if (j.size() != 4 || !j[1].is_array())
            throw ConfigError("affine expects [\"affine\", rows, b, child]");
        const auto& rows = j[1];
        const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
        const Eigen::Index n = m ? static_cast<Eigen::Index>(rows[0].size()) : 0;
        Matrix A(m, n);
        for (Eigen::Index r = 0; r < m; ++r) {
            const Vector row = vector_from(rows[static_cast<std::size_t>(r)]);
            if (row.size() != n)
                throw ConfigError("affine matrix rows differ in length");
            A.row(r) = row.transpose();
        }
        return expr::affine(A, vector_from(j[2]), node_from(j[3]));
    }
    throw ConfigError("unknown combinator '" + op + "'");
}

Json function_json(const PiecewiseFunction& f)
{
    Json leaves = Json::array();
    for (const auto& p : f.pieces())
        leaves.push_back(polynomial_json(p));
    return {{"schema", kFunctionSchema},
            {"name", f.name()},
            {"box", box_json(f.box())},
            {"lipschitz", f.lipschitz()},
            {"critical_value", f.critical_value()},
            {"leaves", leaves},
            {"expr", node_json(f.root())}};
}

PiecewiseFunction function_from(const Json& j)
{
    if (j.contains("schema") && j.at("schema") != kFunctionSchema)
        throw ConfigError("unsupported function schema " + j.at("schema").dump());
    const Box box = box_from(field(j, "box"));
    const int n = static_cast<int>(box.dim());
    std::vector<Polynomial> leaves;
    for (const auto& l : field(j, "leaves"))
        leaves.push_back(polynomial_from(l, n));
    const double crit = j.contains("critical_value") ? as_double(j.at("critical_value")) : 0.0;
    const std::string name = j.contains("name") ? j.at("name").get<std::string>() : "";
    return PiecewiseFunction(name, std::move(leaves), node_from(field(j, "expr")), box,
                             as_double(field(j, "lipschitz")), crit);
}

Json stratification_json(const Stratification& S)
{
    Json strata = Json::array();
    for (const auto& M : S.strata()) {
        Json s = {{"id", M.id}, {"dim", M.dim}, {"shape", M.shape_name()},
                  {"frontier", M.frontier}};
        std::visit(overloaded{
                       [&](const PointShape& p) { s["point"] = vector_json(p.p); },
                       [&](const AffineShape& a) {
                           s["base"] = vector_json(a.base);
                           Json cols = Json::array();
                           for (Eigen::Index c = 0; c < a.basis.cols(); ++c)
                               cols.push_back(vector_json(a.basis.col(c)));
                           s["basis"] = cols;
                           s["lower"] = bounds_json(a.lower);
                           s["upper"] = bounds_json(a.upper);
                           Json hs = Json::array();
                           for (const auto& h : a.halfspaces)
                               hs.push_back({{"a", vector_json(h.a)}, {"b", h.b}});
                           s["halfspaces"] = hs;
                       },
                       [&](const GraphShape& g) {
                           s["lower"] = bounds_json(g.lower);
                           s["upper"] = bounds_json(g.upper);
                           Json xi = Json::array();
                           for (const auto& p : g.xi.comps)
                               xi.push_back(polynomial_json(p));
                           s["xi"] = xi;
                           s["L0"] = g.L0;
                       },
                       [&](const SphereShape& sp) {
                           s["center"] = vector_json(sp.center);
                           s["radius"] = sp.radius;
                       },
                       [&](const RegionShape& r) {
                           Json in = Json::array();
                           for (const auto& p : r.inequalities)
                               in.push_back(polynomial_json(p));
                           s["inequalities"] = in;
                       },
                   },
                   M.shape);
        strata.push_back(std::move(s));
    }
    return {{"schema", kStratificationSchema}, {"box", box_json(S.box())}, {"strata", strata}};
}

Stratification stratification_from(const Json& j)
{
    if (j.contains("schema") && j.at("schema") != kStratificationSchema)
        throw ConfigError("unsupported stratification schema " + j.at("schema").dump());
    const Box box = box_from(field(j, "box"));
    const int n = static_cast<int>(box.dim());
    std::vector<Stratum> strata;
    for (const auto& s : field(j, "strata")) {
        const int id = field(s, "id").get<int>();
        const std::string shape = field(s, "shape").get<std::string>();
        const std::vector<int> fr = s.contains("frontier") ? int_list(s.at("frontier"))
                                                           : std::vector<int>{};
        if (shape == "point") {
            strata.push_back(make_point(id, vector_from(field(s, "point"))));
            strata.back().frontier = fr;
        } else if (shape == "affine") {
            const auto& cols = field(s, "basis");
            Matrix B(n, static_cast<Eigen::Index>(cols.size()));
            for (std::size_t c = 0; c < cols.size(); ++c)
                B.col(static_cast<Eigen::Index>(c)) = vector_from(cols[c]);
            std::vector<Halfspace> hs;
            if (s.contains("halfspaces"))
                for (const auto& h : s.at("halfspaces"))
                    hs.push_back({vector_from(field(h, "a")), as_double(field(h, "b"))});
            strata.push_back(make_affine(id, vector_from(field(s, "base")), B,
                                         bounds_from(field(s, "lower"), -kInf),
                                         bounds_from(field(s, "upper"), kInf), hs, fr));
        } else if (shape == "graph") {
            const Vector lo = bounds_from(field(s, "lower"), -kInf);
            PolyMap xi;
            for (const auto& p : field(s, "xi"))
                xi.comps.push_back(polynomial_from(p, static_cast<int>(lo.size())));
            strata.push_back(make_graph(id, lo, bounds_from(field(s, "upper"), kInf), xi,
                                        as_double(field(s, "L0")), fr));
        } else if (shape == "sphere") {
            strata.push_back(make_sphere(id, vector_from(field(s, "center")),
                                         as_double(field(s, "radius")), fr));
        } else if (shape == "region") {
            std::vector<Polynomial> in;
            for (const auto& p : field(s, "inequalities"))
                in.push_back(polynomial_from(p, n));
            strata.push_back(make_region(id, n, in, fr));
        } else {
            throw ConfigError("unknown stratum shape '" + shape + "'");
        }
    }
    return Stratification(box, std::move(strata));
}

Json to_json(const ValidationReport& r)
{
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"worst_margin", number(c.worst_margin)},
                          {"detail", c.detail}});
    return {{"passed", r.passed()}, {"checks", checks}};
}

Json to_json(const WConditionFit& w)
{
    return {{"C", number(w.C)},
            {"eta", w.eta},
            {"pairs", w.pairs},
            {"max_violation", number(w.max_violation)},
            {"within_cap", w.within_cap}};
}

Json to_json(const ExponentAssignment& ex)
{
    Json per = Json::object();
    for (const auto& [id, s] : ex.per_stratum)
        per[std::to_string(id)] = {
            {"beta", s.beta}, {"gamma", s.gamma}, {"omega", s.omega}, {"eta", s.eta}};
    return {{"theta", ex.theta}, {"beta", ex.beta}, {"strata", per}};
}

Json to_json(const KLFit& fit)
{
    return {{"stratum", fit.stratum},
            {"theta", fit.theta},
            {"eta", number(fit.eta)},
            {"critical_value", fit.critical_value},
            {"samples_used", fit.samples_used},
            {"zero_gradient", fit.zero_gradient},
            {"violations", fit.violations}};
}

Json to_json(const ProofConstants& pc)
{
    Json per = Json::object();
    for (const auto& [id, s] : pc.strata) {
        Json o = {{"c", s.c}, {"beta", s.beta}, {"gamma", s.gamma}, {"omega", s.omega}};
        if (s.lip)
            o["lipschitz"] = {{"Lf", s.lip->Lf}, {"LV", s.lip->LV}, {"LP", s.lip->LP}};
        per[std::to_string(id)] = o;
    }
    return {{"theta", pc.theta},   {"beta", pc.beta},     {"epsilon", pc.epsilon},
            {"alpha_bar", pc.alpha_bar}, {"sigma1", pc.sigma1}, {"sigma2", pc.sigma2},
            {"c", pc.c},           {"L", pc.L},           {"strata", per}};
}

Json run_length(const std::vector<long>& sorted)
{
    Json out = Json::array();
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[j - 1] + 1)
            ++j;
        out.push_back({sorted[i], static_cast<long>(j - i)});
        i = j;
    }
    return out;
}

Json to_json(const IndexTrace& it)
{
    Json rows = Json::array();
    for (long l : it.L) {
        Json r = {{"l", l}, {"s", it.s.at(l)}, {"q", it.q.at(l)}};
        const auto& h = it.H.at(l);
        r["H"] = h ? Json(*h) : Json(nullptr);
        if (auto u = it.U.find(l); u != it.U.end())
            r["U"] = u->second;
        rows.push_back(r);
    }
    return {{"T", it.T},
            {"IC_runs", run_length(it.IC)},
            {"IC_count", it.IC.size()},
            {"G", double_map(it.G)},
            {"L", rows},
            {"fallbacks", it.fallbacks}};
}

Json to_json(const BoundReport& b)
{
    return {{"lhs", b.lhs},
            {"rhs", number(b.rhs)},
            {"holds", b.holds},
            {"hypotheses_ok", b.hypotheses_ok},
            {"flags", b.flags},
            {"components",
             {{"psi_diff", b.psi_diff},
              {"alpha0_beta", b.a0_beta},
              {"step_sum", b.S},
              {"step_sum_pow", b.S_pow},
              {"double_sum", b.double_sum}}},
            {"sigma1", b.sigma1},
            {"sigma2", b.sigma2}};
}

Json to_json(const SigmaFit& s)
{
    return {{"sigma1", s.sigma1}, {"sigma2", s.sigma2}, {"used", s.used}, {"excluded", s.excluded}};
}

Json to_json(const DescentReport& d)
{
    return {{"violations", d.violations},
            {"monotonicity_violations", d.monotonicity_violations},
            {"worst_margin", number(d.worst_margin)},
            {"g_condition_checked", d.g_condition_checked},
            {"g_condition_violations", d.g_condition_violations}};
}

Json to_json(const LengthReport& l)
{
    return {{"lhs", l.lhs},           {"rhs", number(l.rhs)},         {"psi_term", l.psi_term},
            {"sum_term", l.sum_term}, {"tail_term", l.tail_term}, {"holds", l.holds}};
}

Json to_json(const InclusionReport& r)
{
    return {{"samples", r.samples},
            {"left_checked", r.left_checked},
            {"left_violations", r.left_violations},
            {"right_violations", r.right_violations},
            {"worst_left", r.worst_left},
            {"worst_right", r.worst_right}};
}

Json to_json(const QuasiconvexityEstimate& q)
{
    return {{"C", number(q.C)}, {"nodes", q.nodes}, {"edges", q.edges}};
}

Json to_json(const ShrunkenCell& s)
{
    return {{"t", s.t}, {"rho", s.rho}, {"theta", s.theta}, {"beta", s.beta},
            {"margin", number(s.margin())}};
}

} // namespace sg
