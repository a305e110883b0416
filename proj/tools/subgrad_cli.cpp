#include "subgrad/corpus.hpp"
#include "subgrad/io_json.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace sg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitLeftDomain = 2;

std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string timestamp_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_atomic(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." +
           std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush())
            throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void emit(const std::string& out, const std::string& content)
{
    if (out.empty() || out == "-")
        std::cout << content;
    else
        write_atomic(out, content);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        if (!tok.empty())
            out.push_back(tok);
    return out;
}

// ---- config access ----------------------------------------------------------

Json load_config(const std::string& path)
{
    if (path.empty())
        return Json::object();
    Json j = load_json_file(path);
    if (!j.is_object())
        throw ConfigError(path + ": top level must be an object");
    return j;
}

template <typename T>
T get_or(const Json& cfg, const char* key, T fallback)
{
    if (!cfg.contains(key) || cfg.at(key).is_null())
        return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type: " +
                          cfg.at(key).dump());
    }
}

template <typename T>
void overlay(Json& cfg, const char* key, const std::optional<T>& v)
{
    if (v)
        cfg[key] = *v;
}

Json list_json(const std::string& csv, char sep)
{
    Json out = Json::array();
    for (const auto& s : split(csv, sep))
        out.push_back(s);
    return out;
}

Json x0_flag_json(const std::string& s)
{
    if (s == "default" || s == "random")
        return s;
    Json out = Json::array();
    for (const auto& tok : split(s, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("--x0: '" + tok + "' is not a number");
        }
    }
    return out;
}

// ---- resolving a run from config ------------------------------------------

struct RunSpec {
    const BenchmarkEntry* entry = nullptr;
    Vector x0;
    std::string x0_mode;
    StepSchedule schedule;
    Policy policy = Policy::MinNorm;
    long K = 1000;
    unsigned long long seed = 42;
    double tol = 1e-2;
    Json effective; // fully resolved config, echoed and hashed
    std::string hash;
};

RunSpec resolve_run(const Json& cfg)
{
    RunSpec r;
    const std::string name = get_or<std::string>(cfg, "benchmark", "");
    if (name.empty())
        throw ConfigError("no benchmark given");
    try {
        r.entry = &get_benchmark(name);
    } catch (const UnknownBenchmark& e) {
        throw ConfigError(e.what());
    }
    const auto& e = *r.entry;
    r.seed = get_or<unsigned long long>(cfg, "seed", 42);
    r.K = get_or<long>(cfg, "K", 1000);
    if (r.K < 1)
        throw ConfigError("K must be positive");
    r.tol = get_or<double>(cfg, "tol", 1e-2);
    try {
        r.schedule = cfg.contains("schedule") ? parse_schedule(get_or<std::string>(cfg, "schedule", ""))
                                              : e.schedule;
        r.policy = cfg.contains("policy") ? policy_from_string(get_or<std::string>(cfg, "policy", ""))
                                          : e.policy;
    } catch (const Error& ex) {
        throw ConfigError(ex.what());
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    const Json x0 = cfg.contains("x0") ? cfg.at("x0") : Json("default");
    if (x0.is_string()) {
        r.x0_mode = x0.get<std::string>();
        if (r.x0_mode == "default")
            r.x0 = e.x0;
        else if (r.x0_mode == "random")
            r.x0 = random_start(e, r.seed);
        else
            throw ConfigError("x0 must be \"default\", \"random\" or an array");
    } else {
        r.x0_mode = "explicit";
        try {
            r.x0 = vector_from(x0);
        } catch (const ConfigError& ex) {
            throw ConfigError(std::string("x0: ") + ex.what());
        }
    }
    if (r.x0.size() != e.f.dim())
        throw ConfigError("x0 has " + std::to_string(r.x0.size()) + " entries; " + name +
                          " is " + std::to_string(e.f.dim()) + "-dimensional");
    if (!e.f.box().contains(r.x0))
        throw ConfigError("x0 lies outside the domain box of " + name);

    r.effective = {{"benchmark", name},
                   {"x0", vector_json(r.x0)},
                   {"x0_mode", r.x0_mode},
                   {"schedule", r.schedule.describe()},
                   {"policy", to_string(r.policy)},
                   {"K", r.K},
                   {"seed", r.seed},
                   {"tol", r.tol}};
    r.hash = fnv1a_hex(r.effective.dump());
    return r;
}

Json tail_curve(const Trajectory& tr)
{
    const Vector d = tail_diameters(tr);
    const long K = tr.K();
    std::vector<long> ks{0};
    for (int i = 0; i <= 64; ++i) {
        const long k = std::lround(std::pow(static_cast<double>(K), i / 64.0));
        if (k > ks.back() && k <= K)
            ks.push_back(k);
    }
    if (ks.back() != K)
        ks.push_back(K);
    Json out = Json::array();
    for (long k : ks)
        out.push_back({k, number(d[k])});
    return out;
}

std::string trace_text(const RunSpec& r, const Trajectory& tr)
{
    std::ostringstream os;
    write_trace_csv(os, r.entry->f, tr, {r.entry->name, r.hash, timestamp_now()});
    return os.str();
}

// ---- subcommands ------------------------------------------------------------

int cmd_run(const Json& cfg, const std::string& out_dir)
{
    const auto t0 = std::chrono::steady_clock::now();
    const RunSpec r = resolve_run(cfg);
    const auto& e = *r.entry;
    const Trajectory tr = run(e.f, r.x0, r.schedule, r.policy, r.K, r.seed);
    const Verdict v = detect_convergence(tr, r.tol);

    Json summary = {{"schema", "subgrad.summary/1"},
                    {"config", r.effective},
                    {"config_hash", r.hash},
                    {"seed", r.seed},
                    {"K", tr.K()},
                    {"requested", tr.requested},
                    {"truncated", tr.truncated},
                    {"verdict",
                     {{"kind", to_string(v.kind)},
                      {"point", vector_json(v.point)},
                      {"f", evaluate(e.f, v.point)},
                      {"amplitude", v.amplitude},
                      {"window_start", v.window_start}}},
                    {"tail_diameters", tail_curve(tr)}};
    const Json diag = cfg.contains("diagnostics") ? cfg.at("diagnostics") : Json::object();
    if (get_or<bool>(diag, "critical", false))
        summary["critical_point"] = critical_point_check(
            e.f, v.point, 1e-6, std::max(kActivityTol, 2.0 * e.f.lipschitz() * v.amplitude));
    if (get_or<bool>(diag, "bound", false))
        summary["bound"] = to_json(check_diameter_bound(tr, e.constants, e.f_star));

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char info[96];
    std::snprintf(info, sizeof info, "timestamp=%s wall_time_s=%.6f", timestamp_now().c_str(), wall);
    summary["run_info"] = info;

    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    write_atomic(dir / "trace.csv", trace_text(r, tr));
    write_atomic(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << to_string(v.kind) << " amplitude=" << format_double(v.amplitude)
              << " K=" << tr.K() << " hash=" << r.hash << "\n";
    if (tr.truncated) {
        std::cerr << "left the domain box after " << tr.K() << " of " << tr.requested
                  << " steps\n";
        return kExitLeftDomain;
    }
    return kExitOk;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string join_vec(const Vector& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        s += (i ? " " : "") + format_double(v[i]);
    return s;
}

std::string file_safe(std::string s)
{
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_')
            c = '_';
    return s;
}

struct SweepRow {
    Json cfg;
    std::string key;
    std::string line;
    bool ok = false;
};

int cmd_sweep(const Json& cfg, const std::string& out_dir, int jobs)
{
    const auto benchmarks = get_or<std::vector<std::string>>(cfg, "benchmarks", {});
    const auto schedules = get_or<std::vector<std::string>>(cfg, "schedules", {});
    const auto policies = get_or<std::vector<std::string>>(cfg, "policies", {"min_norm"});
    const auto seeds = get_or<std::vector<unsigned long long>>(cfg, "seeds", {42});
    const bool traces = get_or<bool>(cfg, "traces", false);
    if (benchmarks.empty() || schedules.empty() || policies.empty() || seeds.empty())
        throw ConfigError("sweep grid is empty (benchmarks, schedules, policies and seeds "
                          "all need at least one entry)");

    std::vector<SweepRow> rows;
    for (const auto& b : benchmarks)
        for (const auto& s : schedules)
            for (const auto& p : policies)
                for (auto seed : seeds) {
                    SweepRow row;
                    row.cfg = {{"benchmark", b}, {"schedule", s}, {"policy", p}, {"seed", seed}};
                    for (const char* k : {"K", "x0", "tol"})
                        if (cfg.contains(k))
                            row.cfg[k] = cfg.at(k);
                    char sk[24];
                    std::snprintf(sk, sizeof sk, "%020llu", seed);
                    row.key = b + '\x1f' + s + '\x1f' + p + '\x1f' + sk;
                    rows.push_back(std::move(row));
                }
    std::sort(rows.begin(), rows.end(),
              [](const SweepRow& a, const SweepRow& b) { return a.key < b.key; });

    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    auto work = [&](SweepRow& row) {
        const std::string b = row.cfg.at("benchmark"), s = row.cfg.at("schedule"),
                          p = row.cfg.at("policy");
        const std::string seed = std::to_string(row.cfg.at("seed").get<unsigned long long>());
        std::string head = csv_field(b) + ',' + csv_field(s) + ',' + csv_field(p) + ',' + seed;
        try {
            const RunSpec r = resolve_run(row.cfg);
            const auto& e = *r.entry;
            const Trajectory tr = run(e.f, r.x0, r.schedule, r.policy, r.K, r.seed);
            const Verdict v = detect_convergence(tr, r.tol);
            if (traces)
                write_atomic(dir / "traces" /
                                 (file_safe(b + "__" + s + "__" + p + "__" + seed) + ".csv"),
                             trace_text(r, tr));
            row.line = head + ',' + std::to_string(tr.K()) + ',' + csv_field(join_vec(r.x0)) +
                       ',' + (tr.truncated ? "truncated" : "ok") + ',' + to_string(v.kind) +
                       ',' + format_double(v.amplitude) + ',' + csv_field(join_vec(v.point)) +
                       ',' + format_double(evaluate(e.f, v.point)) + ',' + r.hash + ',';
            row.ok = true;
        } catch (const std::exception& ex) {
            row.line = head + ",,,error,,,,,," + csv_field(ex.what());
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++)
            work(rows[i]);
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(rows.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    Json grid = cfg;
    grid.erase("out");
    grid.erase("jobs");
    std::ostringstream os;
    os << "# schema=subgrad.sweep/1 columns=benchmark,schedule,policy,seed,K,x0,status,verdict,"
          "amplitude,final_x,final_f,config_hash,error\n";
    os << "# grid_hash=" << fnv1a_hex(grid.dump()) << " rows=" << rows.size() << "\n";
    os << "# timestamp=" << timestamp_now() << "\n";
    os << "benchmark,schedule,policy,seed,K,x0,status,verdict,amplitude,final_x,final_f,"
          "config_hash,error\n";
    int ok = 0;
    for (const auto& r : rows) {
        os << r.line << "\n";
        ok += r.ok;
    }
    write_atomic(dir / "sweep.csv", os.str());
    std::cout << ok << " of " << rows.size() << " rows succeeded\n";
    return ok > 0 ? kExitOk : kExitConfig;
}

int cmd_bound(const Json& cfg, const std::string& out)
{
    const RunSpec r = resolve_run(cfg);
    const auto& e = *r.entry;
    ProofConstants pc = e.constants;
    Json sigma_src;
    if (cfg.contains("sigma1") && cfg.contains("sigma2")) {
        pc.sigma1 = get_or<double>(cfg, "sigma1", 1.0);
        pc.sigma2 = get_or<double>(cfg, "sigma2", 1.0);
        sigma_src = {{"source", "config"}};
    } else {
        const auto train = get_or<std::vector<unsigned long long>>(cfg, "train_seeds", {1, 2, 3, 4});
        const long trainK = get_or<long>(cfg, "train_K", r.K);
        std::vector<BoundReport> reps;
        for (auto s : train) {
            const Trajectory t = run(e.f, random_start(e, s), r.schedule, r.policy, trainK, s);
            auto pr = prefix_bound_reports(t, pc, e.f_star);
            reps.insert(reps.end(), pr.begin(), pr.end());
        }
        const SigmaFit fit = fit_sigma(reps);
        pc.sigma1 = fit.sigma1;
        pc.sigma2 = fit.sigma2;
        sigma_src = {{"source", "fit"}, {"train_seeds", train}, {"train_K", trainK},
                     {"fit", to_json(fit)}};
    }
    const Trajectory tr = run(e.f, r.x0, r.schedule, r.policy, r.K, r.seed);
    const BoundReport b = check_diameter_bound(tr, pc, e.f_star);
    Json eff = r.effective;
    eff["sigma"] = sigma_src;
    const Json doc = {{"schema", "subgrad.bound/1"},
                      {"config", eff},
                      {"config_hash", fnv1a_hex(eff.dump())},
                      {"seed", r.seed},
                      {"constants", to_json(pc)},
                      {"report", to_json(b)},
                      {"satisfied", b.holds}};
    emit(out, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_kl(const Json& cfg, const std::string& out)
{
    const std::string name = get_or<std::string>(cfg, "benchmark", "");
    const BenchmarkEntry* e = nullptr;
    try {
        e = &get_benchmark(name);
    } catch (const UnknownBenchmark& ex) {
        throw ConfigError(ex.what());
    }
    const int samples = get_or<int>(cfg, "samples", 10000);
    const auto seed = get_or<unsigned long long>(cfg, "seed", 42);
    const double eps = get_or<double>(cfg, "epsilon", e->kl_epsilon);
    std::vector<int> ids;
    if (cfg.contains("stratum")) {
        ids.push_back(get_or<int>(cfg, "stratum", 0));
        if (ids[0] < 0 || ids[0] >= e->strata.size())
            throw ConfigError("stratum " + std::to_string(ids[0]) + " does not exist");
    } else {
        for (int i = 0; i < e->strata.size(); ++i)
            ids.push_back(i);
    }
    Json fits = Json::array();
    for (int id : ids) {
        Json row = {{"stratum", id}};
        if (auto it = e->known_theta.find(id); it != e->known_theta.end())
            row["known_theta"] = it->second;
        try {
            row["fit"] = to_json(estimate_kl(e->f, e->strata, id, e->f_star, samples, seed, eps));
        } catch (const DegenerateSamples& ex) {
            row["error"] = ex.what();
        }
        fits.push_back(row);
    }
    const Json eff = {{"benchmark", name}, {"samples", samples}, {"seed", seed}, {"epsilon", eps}};
    const Json doc = {{"schema", "subgrad.kl/1"},
                      {"config", eff},
                      {"config_hash", fnv1a_hex(eff.dump())},
                      {"seed", seed},
                      {"fits", fits}};
    emit(out, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_indices(const Json& cfg, const std::string& out)
{
    const RunSpec r = resolve_run(cfg);
    const auto& e = *r.entry;
    const Trajectory tr = run(e.f, r.x0, r.schedule, r.policy, r.K, r.seed);
    const IndexTrace it = extract_indices(tr, e.constants, e.strata);
    const Json doc = {{"schema", "subgrad.indices/1"},
                      {"config", r.effective},
                      {"config_hash", r.hash},
                      {"seed", r.seed},
                      {"indices", to_json(it)}};
    emit(out, doc.dump(2) + "\n");
    return tr.truncated ? kExitLeftDomain : kExitOk;
}

int cmd_cellcheck(const Json& cfg, const std::string& out)
{
    const std::string name = get_or<std::string>(cfg, "cell", "triangle");
    NamedCell nc;
    try {
        nc = get_cell(name);
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    ShrinkParams p = nc.params;
    p.c = get_or<double>(cfg, "c", p.c);
    p.kappa = get_or<double>(cfg, "kappa", p.kappa);
    p.margin_scale = get_or<double>(cfg, "margin_scale", p.margin_scale);
    const double t = get_or<double>(cfg, "t", 0.1);
    const int samples = get_or<int>(cfg, "samples", 10000);
    const auto seed = get_or<unsigned long long>(cfg, "seed", 42);
    const bool qc = get_or<bool>(cfg, "quasiconvexity", true);

    const Json eff = {{"cell", name}, {"t", t},         {"samples", samples}, {"seed", seed},
                      {"c", p.c},     {"kappa", p.kappa}, {"margin_scale", p.margin_scale},
                      {"quasiconvexity", qc}};
    Json doc = {{"schema", "subgrad.cellcheck/1"},
                {"config", eff},
                {"config_hash", fnv1a_hex(eff.dump())},
                {"seed", seed},
                {"validation", to_json(validate_cell(nc.cell, 1000, seed))}};
    try {
        const ShrunkenCell Mt = shrink_cell(nc.cell, t, p);
        doc["shrunken"] = to_json(Mt);
        doc["inclusions"] = to_json(verify_inclusions(nc.cell, Mt, samples, seed));
    } catch (const Error& ex) {
        doc["shrink_error"] = ex.what();
    }
    if (qc) {
        try {
            doc["quasiconvexity"] = to_json(quasiconvexity_estimate(nc.cell, 400, seed));
        } catch (const DisconnectedSample& ex) {
            doc["quasiconvexity_error"] = ex.what();
        }
    }
    emit(out, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_list(const std::string& export_dir, bool cells)
{
    if (cells) {
        for (const auto& c : list_cells())
            std::cout << c << "\n";
        return kExitOk;
    }
    for (const auto& name : list_benchmarks()) {
        const auto& e = get_benchmark(name);
        std::cout << name << "\t" << e.f.dim() << "\t" << e.description << "\n";
        if (!export_dir.empty()) {
            const fs::path dir(export_dir);
            write_atomic(dir / (name + ".function.json"), function_json(e.f).dump(2) + "\n");
            write_atomic(dir / (name + ".strata.json"),
                         stratification_json(e.strata).dump(2) + "\n");
        }
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Subgradient method experiments on piecewise polynomial functions"};
    app.require_subcommand(1);

    // Flags shared by the run-like subcommands; each overrides the config file.
    struct Common {
        std::string config, out;
        std::optional<std::string> benchmark, schedule, policy, x0;
        std::optional<long> K;
        std::optional<unsigned long long> seed;
        std::optional<double> tol;
    };
    Common run_o, bound_o, idx_o;
    auto add_common = [](CLI::App* sub, Common& o, const char* out_help) {
        sub->add_option("-c,--config", o.config, "JSON config file");
        sub->add_option("-o,--out", o.out, out_help);
        sub->add_option("-b,--benchmark", o.benchmark, "benchmark name");
        sub->add_option("-s,--schedule", o.schedule,
                        "step schedule, e.g. constant:0.1, harmonic:1,1, power:1,0.75,1");
        sub->add_option("-p,--policy", o.policy,
                        "min_norm | first_active | random_vertex | random_convex");
        sub->add_option("--x0", o.x0, "starting point: comma list, default, or random");
        sub->add_option("-K,--steps", o.K, "number of steps");
        sub->add_option("--seed", o.seed, "RNG seed");
        sub->add_option("--tol", o.tol, "convergence tolerance on the tail diameter");
    };
    auto apply_common = [](Json& cfg, const Common& o) {
        overlay(cfg, "benchmark", o.benchmark);
        overlay(cfg, "schedule", o.schedule);
        overlay(cfg, "policy", o.policy);
        overlay(cfg, "K", o.K);
        overlay(cfg, "seed", o.seed);
        overlay(cfg, "tol", o.tol);
        if (o.x0)
            cfg["x0"] = x0_flag_json(*o.x0);
    };

    auto* run_cmd = app.add_subcommand("run", "run one trajectory; writes trace.csv and summary.json");
    add_common(run_cmd, run_o, "output directory");
    bool diag_bound = false, diag_critical = false;
    run_cmd->add_flag("--bound", diag_bound, "add the diameter bound report to the summary");
    run_cmd->add_flag("--critical", diag_critical, "check criticality of the final point");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of trajectories");
    std::string sw_config, sw_out;
    std::optional<std::string> sw_bench, sw_sched, sw_pol, sw_seeds, sw_x0;
    std::optional<long> sw_K;
    int jobs = 1;
    bool sw_traces = false;
    sweep_cmd->add_option("-c,--config", sw_config, "JSON grid file");
    sweep_cmd->add_option("-o,--out", sw_out, "output directory");
    sweep_cmd->add_option("--benchmarks", sw_bench, "comma-separated benchmark names");
    sweep_cmd->add_option("--schedules", sw_sched, "semicolon-separated schedules");
    sweep_cmd->add_option("--policies", sw_pol, "comma-separated policies");
    sweep_cmd->add_option("--seeds", sw_seeds, "comma-separated seeds");
    sweep_cmd->add_option("--x0", sw_x0, "default or random");
    sweep_cmd->add_option("-K,--steps", sw_K, "number of steps");
    sweep_cmd->add_option("-j,--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--traces", sw_traces, "also write one trace CSV per row");

    auto* bound_cmd = app.add_subcommand("bound", "check the diameter bound on one run");
    add_common(bound_cmd, bound_o, "report file (default stdout)");
    std::optional<double> sigma1, sigma2;
    bound_cmd->add_option("--sigma1", sigma1, "fixed sigma1 (skips fitting)");
    bound_cmd->add_option("--sigma2", sigma2, "fixed sigma2 (skips fitting)");

    auto* kl_cmd = app.add_subcommand("kl", "fit KL exponents on the strata of a benchmark");
    std::string kl_config, kl_out;
    std::optional<std::string> kl_bench;
    std::optional<int> kl_stratum, kl_samples;
    std::optional<unsigned long long> kl_seed;
    std::optional<double> kl_eps;
    kl_cmd->add_option("-c,--config", kl_config, "JSON config file");
    kl_cmd->add_option("-o,--out", kl_out, "report file (default stdout)");
    kl_cmd->add_option("-b,--benchmark", kl_bench, "benchmark name");
    kl_cmd->add_option("--stratum", kl_stratum, "single stratum id");
    kl_cmd->add_option("--samples", kl_samples, "sample count");
    kl_cmd->add_option("--seed", kl_seed, "RNG seed");
    kl_cmd->add_option("--epsilon", kl_eps, "level window around the critical value");

    auto* idx_cmd = app.add_subcommand("indices", "index sets of one run");
    add_common(idx_cmd, idx_o, "report file (default stdout)");

    auto* cell_cmd = app.add_subcommand("cellcheck", "shrink a named cell and verify inclusions");
    std::string cc_config, cc_out;
    std::optional<std::string> cc_cell;
    std::optional<double> cc_t, cc_scale, cc_c, cc_kappa;
    std::optional<int> cc_samples;
    std::optional<unsigned long long> cc_seed;
    bool cc_no_qc = false;
    cell_cmd->add_option("-c,--config", cc_config, "JSON config file");
    cell_cmd->add_option("-o,--out", cc_out, "report file (default stdout)");
    cell_cmd->add_option("--cell", cc_cell, "interval | graph | triangle | square | horseshoe");
    cell_cmd->add_option("-t", cc_t, "shrink level");
    cell_cmd->add_option("--width-c", cc_c, "band width constant");
    cell_cmd->add_option("--kappa", cc_kappa, "band width exponent");
    cell_cmd->add_option("--margin-scale", cc_scale, "scale of the certified margin");
    cell_cmd->add_option("--samples", cc_samples, "samples per inclusion side");
    cell_cmd->add_option("--seed", cc_seed, "RNG seed");
    cell_cmd->add_flag("--no-quasiconvexity", cc_no_qc, "skip the quasiconvexity estimate");

    auto* list_cmd = app.add_subcommand("list-benchmarks", "list corpus entries");
    std::string export_dir;
    bool list_cells_flag = false;
    list_cmd->add_option("--export", export_dir, "write function and stratification JSON here");
    list_cmd->add_flag("--cells", list_cells_flag, "list named cells instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) {
            Json cfg = load_config(run_o.config);
            apply_common(cfg, run_o);
            if (diag_bound)
                cfg["diagnostics"]["bound"] = true;
            if (diag_critical)
                cfg["diagnostics"]["critical"] = true;
            return cmd_run(cfg, run_o.out);
        }
        if (*sweep_cmd) {
            Json cfg = load_config(sw_config);
            if (sw_bench)
                cfg["benchmarks"] = list_json(*sw_bench, ',');
            if (sw_sched)
                cfg["schedules"] = list_json(*sw_sched, ';');
            if (sw_pol)
                cfg["policies"] = list_json(*sw_pol, ',');
            if (sw_seeds) {
                Json s = Json::array();
                for (const auto& tok : split(*sw_seeds, ','))
                    s.push_back(std::stoull(tok));
                cfg["seeds"] = s;
            }
            if (sw_x0)
                cfg["x0"] = x0_flag_json(*sw_x0);
            overlay(cfg, "K", sw_K);
            if (sw_traces)
                cfg["traces"] = true;
            return cmd_sweep(cfg, sw_out, jobs);
        }
        if (*bound_cmd) {
            Json cfg = load_config(bound_o.config);
            apply_common(cfg, bound_o);
            overlay(cfg, "sigma1", sigma1);
            overlay(cfg, "sigma2", sigma2);
            return cmd_bound(cfg, bound_o.out);
        }
        if (*kl_cmd) {
            Json cfg = load_config(kl_config);
            overlay(cfg, "benchmark", kl_bench);
            overlay(cfg, "stratum", kl_stratum);
            overlay(cfg, "samples", kl_samples);
            overlay(cfg, "seed", kl_seed);
            overlay(cfg, "epsilon", kl_eps);
            return cmd_kl(cfg, kl_out);
        }
        if (*idx_cmd) {
            Json cfg = load_config(idx_o.config);
            apply_common(cfg, idx_o);
            return cmd_indices(cfg, idx_o.out);
        }
        if (*cell_cmd) {
            Json cfg = load_config(cc_config);
            overlay(cfg, "cell", cc_cell);
            overlay(cfg, "t", cc_t);
            overlay(cfg, "c", cc_c);
            overlay(cfg, "kappa", cc_kappa);
            overlay(cfg, "margin_scale", cc_scale);
            overlay(cfg, "samples", cc_samples);
            overlay(cfg, "seed", cc_seed);
            if (cc_no_qc)
                cfg["quasiconvexity"] = false;
            return cmd_cellcheck(cfg, cc_out);
        }
        if (*list_cmd)
            return cmd_list(export_dir, list_cells_flag);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
