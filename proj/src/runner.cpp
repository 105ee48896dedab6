#include "kelab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "kelab/bergman.hpp"
#include "kelab/conventions.hpp"
#include "kelab/errors.hpp"
#include "kelab/family.hpp"
#include "kelab/io.hpp"
#include "kelab/ma_solver.hpp"
#include "kelab/numerics.hpp"
#include "kelab/ricci.hpp"
#include "kelab/suite.hpp"

namespace kelab {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::set<std::string> kKinds = {"solve", "ricci", "bergman", "family", "suite"};

[[noreturn]] void bad_field(const std::string& field, const std::string& why)
{
    throw ConfigurationError("config field '" + field + "': " + why);
}

template <class T>
T field_as(const json& j, const std::string& key)
{
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        bad_field(key, "wrong type (got " + std::string(j.type_name()) + ")");
    }
}

double number(const json& j, const std::string& key)
{
    if (!j.is_number()) bad_field(key, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& key)
{
    if (!j.is_number_integer()) bad_field(key, "expected an integer");
    return j.get<int>();
}

std::vector<double> number_list(const json& j, const std::string& key)
{
    if (!j.is_array()) bad_field(key, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : j) out.push_back(number(x, key));
    return out;
}

Perturbation perturbation_from_string(const std::string& s)
{
    if (s == "logistic") return Perturbation::logistic;
    if (s == "inverse_quadratic") return Perturbation::inverse_quadratic;
    if (s == "log_log") return Perturbation::log_log;
    throw ConfigurationError("config field 'profile': unknown profile '" + s + "'");
}

DivisorData divisor_of(const RunConfig& c)
{
    std::vector<DivisorPart> parts;
    if (c.a0 > 0 || c.c0 > 0) parts.push_back({SupportPoint::zero, c.a0, c.c0});
    if (c.ainf > 0 || c.cinf > 0) parts.push_back({SupportPoint::infinity, c.ainf, c.cinf});
    return parts.empty() ? DivisorData{} : make_divisor(parts);
}

Backend backend_of(const RunConfig& c) { return c.serial ? Backend::serial : Backend::openmp; }

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

class Artifacts {
public:
    Artifacts(const fs::path& dir, RunManifest& m) : dir_(dir), manifest_(m) {}
    void write(const std::string& name, const std::string& content)
    {
        atomic_write(dir_ / name, content);
        manifest_.artifacts.push_back(name);
    }

private:
    fs::path dir_;
    RunManifest& manifest_;
};

void add(RunManifest& m, std::string check, bool passed, std::string detail)
{
    m.verdicts.push_back({std::move(check), passed, std::move(detail)});
}

void run_solve(const RunConfig& c, RunManifest& m, Artifacts& out)
{
    auto g = make_grid(c.half_width(), c.node_count());
    DivisorData d = divisor_of(c);
    auto prob = ke_problem(fs_weight(c.k, g), d);
    auto rep = solve_ke_ode(prob, c.tol);
    out.write("solution.csv", weight_csv(rep.solution));
    auto current = ke_current(rep, d);
    out.write("current.csv", weight_csv(current));
    out.write("report.json", report_json(rep).dump(2) + "\n");
    add(m, "converged", rep.residual <= rep.tolerance,
        "residual " + sci(rep.residual) + " after " + std::to_string(rep.iterations) + " Newton steps");

    if (d.empty()) {
        // (k-2) log(1+e^t) + log((k-2)/2π) solves the smooth equation exactly
        const double shift = std::log((c.k - 2) / (2 * std::numbers::pi));
        auto [lo, hi] = g->index_range(-c.half_width() + 2, c.half_width() - 2);
        double err = 0;
        for (int i = lo; i <= hi; ++i)
            err = std::max(err, std::abs(rep.solution[i] - ((c.k - 2) * softplus((*g)[i]) + shift)));
        add(m, "fs_oracle", err <= 1e-6, "sup error " + sci(err));
    } else {
        auto [l0, linf] = lelong_numbers(current);
        bool ok = std::abs(l0 - c.a0) <= 1e-8 && std::abs(linf - c.ainf) <= 1e-8;
        add(m, "lelong_numbers", ok, "(" + sci(l0) + ", " + sci(linf) + ")");
    }

    if (!c.delta_schedule.empty() || !c.eps_schedule.empty()) {
        auto deltas = c.delta_schedule.empty() ? c.eps_schedule : c.delta_schedule;
        auto epsilons = c.eps_schedule.empty() ? c.delta_schedule : c.eps_schedule;
        auto diag = regularized_diagonal(prob, deltas, epsilons, c.tol);
        CsvTable t({"step", "delta", "epsilon", "step_distance", "limit_distance"});
        for (std::size_t i = 0; i < diag.diagonal.size(); ++i) {
            const auto& s = diag.diagonal[i];
            t.add_row({double(i), s.delta, s.epsilon, i == 0 ? std::nan("") : diag.trace[i - 1],
                       sup_distance(s.report.potential, rep.potential)});
        }
        out.write("diagonal_trace.csv", t.str());
        double dist = sup_distance(diag.diagonal.back().report.potential, rep.potential);
        add(m, "diagonal_cauchy", diag.cauchy, "last step distance " + sci(diag.trace.back()));
        add(m, "diagonal_limit", dist < 1e-3, "distance to unregularized " + sci(dist));
    }
}

void run_ricci_kind(const RunConfig& c, RunManifest& m, Artifacts& out)
{
    auto g = make_grid(c.half_width(), c.node_count());
    DivisorData d = divisor_of(c);
    auto tw = fs_weight(c.k, g);
    auto [state, trace] = run_ricci(tw, d, c.p, c.m_max, c.stop_tol, c.tol);
    const double rate = (c.p - 1.0) / c.p;
    CsvTable t({"m", "gap", "ratio", "bound", "envelope", "normalization", "residual"});
    for (std::size_t i = 0; i < trace.gaps.size(); ++i) {
        int step = int(i) + 1;
        double ratio = i == 0 ? std::nan("") : trace.ratios[i - 1];
        double env = std::pow(rate, step - 1) * trace.gaps[0] * 1.01;
        t.add_row({double(step), trace.gaps[i], ratio, rate + 1e-3, env,
                   i < trace.normalization.size() ? trace.normalization[i] : std::nan(""),
                   i < trace.residual.size() ? trace.residual[i] : std::nan("")});
    }
    out.write("ricci_trace.csv", t.str());
    out.write("ricci_limit.csv", weight_csv(state.weight.scaled(1.0 / c.p)));

    add(m, "converged", trace.converged, std::to_string(state.m) + " steps");
    add(m, "contraction", trace.contraction_violations.empty(),
        std::to_string(trace.contraction_violations.size()) + " ratios above " + sci(rate + 1e-3));
    add(m, "envelope", trace.envelope_ok, "geometric envelope with factor 1.01");
    double fpr = fixed_point_residual(state);
    add(m, "fixed_point", fpr <= 1e-6, "residual " + sci(fpr));
    auto prob = ke_problem(tw, d);
    auto ke = solve_ke_ode(prob, c.tol);
    auto cmp = compare_to_ke(state, ke, prob);
    bool lelong = cmp.lelong_zero_difference == c.a0 && cmp.lelong_infinity_difference == c.ainf;
    add(m, "ke_limit", cmp.sup_distance <= 1e-5 && lelong,
        "distance " + sci(cmp.sup_distance) + ", Lelong difference (" + sci(cmp.lelong_zero_difference) + ", " +
            sci(cmp.lelong_infinity_difference) + ")");
}

void run_bergman_kind(const RunConfig& c, RunManifest& m, Artifacts& out)
{
    auto ex = run_bergman_experiment("config", c.k, c.p, divisor_of(c), c.levels, backend_of(c), c.half_width(),
                                     c.node_count());
    add(m, "route_agreement", ex.route_agreement <= 1e-5, "Ricci vs direct KE " + sci(ex.route_agreement));
    if (ex.run.rows.empty()) return;
    CsvTable t({"level", "dimension", "distance", "lower_margin", "chain_lhs", "chain_bound", "chain_slack",
                "asymptotic", "c_ell", "trend", "log_gram_min", "log_gram_max"});
    for (const auto& r : ex.run.rows)
        t.add_row({double(r.level), double(r.dimension), r.distance, r.lower_margin, r.chain_lhs, r.chain_bound,
                   r.chain_slack, r.asymptotic, r.c_ell, r.trend, r.log_gram_min, r.log_gram_max});
    out.write("bergman_trace.csv", t.str());
    auto prof = renormalized_profile(ex.run.last);
    CsvTable k({"t", "renormalized"});
    for (int i = 0; i < ex.run.last.grid->node_count; ++i) k.add_row({(*ex.run.last.grid)[i], prof[i]});
    out.write("bergman_profile.csv", k.str());

    auto v = convergence_check(ex.run.rows);
    add(m, "monotone", v.monotone, "distance trace from level 20, final " + sci(v.final_distance));
    add(m, "lower_bound", v.lower_bound, "");
    auto ch = integral_chain_check(ex.run.rows, c.p, c.k - 2);
    add(m, "integral_chain", ch.holds, "worst slack " + sci(ch.worst_slack));
    add(m, "dimensions", ch.dimensions_exact, "");
}

void run_family_kind(const RunConfig& c, RunManifest& m, Artifacts& out)
{
    FamilyRecipe rec;
    rec.kind = family_kind_from_string(c.family);
    rec.k = c.k;
    rec.profile = perturbation_from_string(c.profile);
    rec.amplitude = c.amplitude;
    if (c.a0 > 0) rec.a0 = c.a0;
    rec.beta = c.beta;
    auto base = make_base_grid(c.base_min, c.base_max, c.base_nodes);
    auto g = make_grid(c.half_width(), c.node_count());
    FiberFamily fam;
    try {
        fam = build_family(rec, base, g);
    } catch (const ConfigurationError& e) {
        add(m, "precheck", false, e.what());
        return;
    }
    add(m, "precheck", true, "");
    auto rel = solve_fiberwise(fam, c.tol, backend_of(c));

    std::vector<std::string> cols{"t"};
    for (double s : base.nodes) cols.push_back("s=" + format_number(s));
    CsvTable mat(cols);
    for (int i = 0; i < g->node_count; ++i) {
        std::vector<double> row{(*g)[i]};
        for (const auto& col : rel.columns) row.push_back(col[i]);
        mat.add_row(row);
    }
    out.write("relative_potential.csv", mat.str());

    auto cert = base_positivity_check(rel, fam, 1e-6);
    json cj = {{"passed", cert.passed},       {"tol", cert.tol},
               {"min_tt", cert.min_tt},       {"min_ss", cert.min_ss},
               {"min_det", cert.min_det},     {"worst_margin", cert.worst_margin},
               {"worst_t", cert.worst_t},     {"worst_s", cert.worst_s},
               {"max_mixed", cert.max_mixed}, {"max_ss", cert.max_ss},
               {"scope", "joint positivity on the smooth product family only"}};
    out.write("positivity.json", cj.dump(2) + "\n");
    add(m, "positivity", cert.passed, "worst scaled margin " + sci(cert.worst_margin));

    CsvTable ns({"m", "j", "s", "neg_log_norm"});
    double worst = std::numeric_limits<double>::infinity();
    for (int mm : {1, 2, 3}) {
        for (int j : admissible_exponents(mm, fam)) {
            auto nc = ns_convexity_check(j, mm, fam);
            worst = std::min(worst, nc.min_second_difference);
            for (std::size_t b = 0; b < nc.values.size(); ++b)
                ns.add_row({double(mm), double(j), base.nodes[b], nc.values[b]});
        }
    }
    out.write("ns_trace.csv", ns.str());
    add(m, "ns_convexity", worst >= -1e-8, "min second difference " + sci(worst));
    double bound = uniform_sup_check(rel, fam, c.base_min, c.base_max);
    add(m, "sup_bound", std::isfinite(bound), "sup " + sci(bound));
}

void run_suite_kind(const RunConfig& c, RunManifest& m, Artifacts& out, bool echo)
{
    SuiteOptions opts;
    opts.seed = c.seed;
    opts.backend = backend_of(c);
    opts.bergman_levels = c.levels;
    AcceptanceSuite suite(opts);
    std::vector<int> ids = c.criteria;
    if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    json results = json::array();
    std::string table;
    for (int id : ids) {
        auto r = suite.run(id);
        std::string line = format_result_line(r);
        if (echo) std::cout << line << std::endl;
        table += line + "\n";
        results.push_back({{"id", r.id},
                           {"title", r.title},
                           {"passed", r.passed},
                           {"detail", r.detail},
                           {"seconds", r.seconds},
                           {"metrics", r.metrics}});
        add(m, "criterion " + std::to_string(id), r.passed, r.detail);
    }
    out.write("suite.json", results.dump(2) + "\n");
    out.write("suite_summary.txt", table);
}

}  // namespace

double RunConfig::half_width() const
{
    if (T) return *T;
    return kind == "bergman" ? 80.0 : 30.0;
}

int RunConfig::node_count() const
{
    if (N) return *N;
    if (kind == "bergman") return 8801;
    if (kind == "family") return 1024;
    return 4096;
}

json RunConfig::to_json() const
{
    return {{"kind", kind},
            {"k", k},
            {"a0", a0},
            {"ainf", ainf},
            {"c0", c0},
            {"cinf", cinf},
            {"p", p},
            {"T", half_width()},
            {"N", node_count()},
            {"base_min", base_min},
            {"base_max", base_max},
            {"base_nodes", base_nodes},
            {"delta_schedule", delta_schedule},
            {"eps_schedule", eps_schedule},
            {"tol", tol},
            {"stop_tol", stop_tol},
            {"m_max", m_max},
            {"levels", levels},
            {"family", family},
            {"profile", profile},
            {"amplitude", amplitude},
            {"beta", beta},
            {"out", out},
            {"seed", seed},
            {"criteria", criteria},
            {"serial", serial}};
}

RunConfig parse_config(const json& j)
{
    if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
    RunConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "kind") c.kind = field_as<std::string>(v, key);
        else if (key == "k") c.k = number(v, key);
        else if (key == "a0") c.a0 = number(v, key);
        else if (key == "ainf") c.ainf = number(v, key);
        else if (key == "c0") c.c0 = number(v, key);
        else if (key == "cinf") c.cinf = number(v, key);
        else if (key == "p") c.p = integer(v, key);
        else if (key == "T") c.T = number(v, key);
        else if (key == "N") c.N = integer(v, key);
        else if (key == "base_min") c.base_min = number(v, key);
        else if (key == "base_max") c.base_max = number(v, key);
        else if (key == "base_nodes") c.base_nodes = integer(v, key);
        else if (key == "delta_schedule") c.delta_schedule = number_list(v, key);
        else if (key == "eps_schedule") c.eps_schedule = number_list(v, key);
        else if (key == "tol") c.tol = number(v, key);
        else if (key == "stop_tol") c.stop_tol = number(v, key);
        else if (key == "m_max") c.m_max = integer(v, key);
        else if (key == "levels") c.levels = integer(v, key);
        else if (key == "family") c.family = field_as<std::string>(v, key);
        else if (key == "profile") c.profile = field_as<std::string>(v, key);
        else if (key == "amplitude") c.amplitude = number(v, key);
        else if (key == "beta") c.beta = number(v, key);
        else if (key == "out") c.out = field_as<std::string>(v, key);
        else if (key == "seed") {
            if (!v.is_number_unsigned()) bad_field(key, "expected a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "criteria") {
            if (!v.is_array()) bad_field(key, "expected a list of integers");
            c.criteria.clear();
            for (const auto& x : v) c.criteria.push_back(integer(x, key));
        } else if (key == "serial") {
            if (!v.is_boolean()) bad_field(key, "expected true or false");
            c.serial = v.get<bool>();
        } else
            bad_field(key, "unknown key");
    }
    validate(c);
    return c;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigurationError("config file " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

void validate(const RunConfig& c)
{
    if (!kKinds.count(c.kind)) bad_field("kind", "must be one of solve, ricci, bergman, family, suite");
    if (!(c.k > 2)) bad_field("k", "twist degree must exceed 2");
    for (auto [name, a] : {std::pair{"a0", c.a0}, std::pair{"ainf", c.ainf}})
        if (!(a >= 0 && a < 1)) bad_field(name, "divisor coefficient must lie in [0, 1)");
    for (auto [name, x] : {std::pair{"c0", c.c0}, std::pair{"cinf", c.cinf}})
        if (!(x >= 0)) bad_field(name, "must be non-negative");
    if (c.p < 1) bad_field("p", "must be at least 1");
    if (!(c.half_width() > 0)) bad_field("T", "must be positive");
    if (c.node_count() < 3) bad_field("N", "at least 3 grid nodes are required");
    if (!(c.base_min < c.base_max)) bad_field("base_max", "must exceed base_min");
    if (c.base_nodes < 5) bad_field("base_nodes", "at least 5 base nodes are required");
    for (auto [name, sched] : {std::pair{"delta_schedule", &c.delta_schedule},
                               std::pair{"eps_schedule", &c.eps_schedule}})
        for (double x : *sched)
            if (!(x >= 0)) bad_field(name, "entries must be non-negative");
    if (!c.delta_schedule.empty() && !c.eps_schedule.empty() && c.delta_schedule.size() != c.eps_schedule.size())
        bad_field("eps_schedule", "must have the same length as delta_schedule");
    if (!(c.tol > 0)) bad_field("tol", "must be positive");
    if (!(c.stop_tol > 0)) bad_field("stop_tol", "must be positive");
    if (c.m_max < 2) bad_field("m_max", "must be at least 2");
    if (c.levels < 3) bad_field("levels", "at least 3 levels are required");
    try {
        family_kind_from_string(c.family);
    } catch (const std::exception&) {
        bad_field("family", "unknown family '" + c.family + "'");
    }
    perturbation_from_string(c.profile);
    if (!(c.amplitude >= 0)) bad_field("amplitude", "must be non-negative");
    if (c.out.empty()) bad_field("out", "must not be empty");
    for (int id : c.criteria)
        if (id < 1 || id > 10) bad_field("criteria", "criterion ids run from 1 to 10");
}

bool RunManifest::all_passed() const
{
    if (verdicts.empty()) return false;
    for (const auto& v : verdicts)
        if (!v.passed) return false;
    return true;
}

json RunManifest::to_json() const
{
    json vs = json::array();
    for (const auto& v : verdicts) vs.push_back({{"check", v.check}, {"passed", v.passed}, {"detail", v.detail}});
    return {{"config", config},
            {"convention_hash", convention_hash},
            {"version", version},
            {"wall_clock_seconds", wall_clock},
            {"verdicts", vs},
            {"artifacts", artifacts},
            {"all_passed", all_passed()}};
}

RunManifest run(const RunConfig& cfg, bool echo)
{
    validate(cfg);
    auto t0 = std::chrono::steady_clock::now();
    RunManifest m;
    m.config = cfg.to_json();
    m.convention_hash = conventions_hash();
    m.version = version();
    fs::path dir(cfg.out);
    fs::create_directories(dir);
    Artifacts out(dir, m);
    try {
        if (cfg.kind == "solve") run_solve(cfg, m, out);
        else if (cfg.kind == "ricci") run_ricci_kind(cfg, m, out);
        else if (cfg.kind == "bergman") run_bergman_kind(cfg, m, out);
        else if (cfg.kind == "family") run_family_kind(cfg, m, out);
        else run_suite_kind(cfg, m, out, echo);
    } catch (const std::exception& e) {
        add(m, cfg.kind, false, std::string("error: ") + e.what());
    }
    m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (echo && cfg.kind != "suite")
        for (const auto& v : m.verdicts)
            std::cout << (v.passed ? "PASS " : "FAIL ") << v.check << (v.detail.empty() ? "" : ": " + v.detail)
                      << "\n";
    atomic_write(dir / "manifest.json", m.to_json().dump(2) + "\n");
    return m;
}

std::vector<fs::path> emit_plotdata(const std::vector<fs::path>& traces, const fs::path& out_dir)
{
    if (traces.empty()) throw ConfigurationError("emit_plotdata: no trace files given");
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    for (const auto& path : traces) {
        if (!fs::exists(path)) throw ConfigurationError("emit_plotdata: missing trace " + path.string());
        auto csv = read_csv(path);
        auto has = [&](const char* name) {
            return std::find(csv.columns.begin(), csv.columns.end(), name) != csv.columns.end();
        };
        if (has("gap") && has("ratio")) {
            std::size_t cm = csv.column("m"), cg = csv.column("gap"), cr = csv.column("ratio"), cb = csv.column("bound");
            CsvTable t({"m", "gap", "ratio", "bound"});
            for (const auto& r : csv.rows) t.add_row({r[cm], r[cg], r[cr], r[cb]});
            fs::path target = out_dir / "plot_ricci_contraction.csv";
            atomic_write(target, t.str());
            written.push_back(target);
        } else if (has("level") && has("distance")) {
            std::size_t cl = csv.column("level"), cd = csv.column("distance"), cs = csv.column("chain_slack");
            CsvTable t({"level", "sup_distance", "chain_slack"});
            for (const auto& r : csv.rows) t.add_row({r[cl], r[cd], r[cs]});
            fs::path target = out_dir / "plot_bergman_distance.csv";
            atomic_write(target, t.str());
            written.push_back(target);
        } else {
            throw ConfigurationError("emit_plotdata: " + path.string() + " is neither a Ricci nor a Bergman trace");
        }
    }
    return written;
}

}  // namespace kelab
