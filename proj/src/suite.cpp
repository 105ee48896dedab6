#include "kelab/suite.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kelab/errors.hpp"
#include "kelab/family.hpp"
#include "kelab/ma_solver.hpp"
#include "kelab/numerics.hpp"
#include "kelab/ricci.hpp"

namespace kelab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

DivisorData conic_or_empty(double a0) { return a0 > 0 ? conic_divisor(a0) : DivisorData{}; }

CriterionResult fs_oracle()
{
    CriterionResult r{1, "closed-form KE oracle (k=4)", false, "", 0, {}};
    auto t0 = Clock::now();
    auto g = make_grid(30, 4096);
    auto rep = solve_ke_ode(ke_problem(fs_weight(4, g)));
    double secs = seconds_since(t0);
    auto [lo, hi] = g->index_range(-28, 28);
    double err = 0;
    for (int i = lo; i <= hi; ++i)
        err = std::max(err, std::abs(rep.solution[i] - (2 * softplus((*g)[i]) - std::log(std::numbers::pi))));
    r.passed = err <= 1e-6 && secs < 1.0;
    r.detail = "sup error " + sci(err) + " on [-28,28] (bound 1e-6), solve " + sci(secs) + " s (bound 1 s)";
    r.metrics = {{"sup_error", err}, {"solve_seconds", secs}, {"iterations", rep.iterations}};
    return r;
}

CriterionResult contraction()
{
    CriterionResult r{2, "Ricci contraction ratio (p-1)/p", true, "", 0, nlohmann::json::array()};
    auto g = make_grid(30, 4096);
    std::ostringstream os;
    for (int p : {2, 3, 5}) {
        for (double a0 : {0.0, 0.5}) {
            auto t0 = Clock::now();
            auto [state, trace] = run_ricci(fs_weight(4, g), conic_or_empty(a0), p, 600);
            double secs = seconds_since(t0);
            double c = (p - 1.0) / p, worst = 0;
            for (double x : trace.ratios) worst = std::max(worst, x);
            bool ok = trace.converged && trace.contraction_violations.empty() && trace.envelope_ok && secs < 30;
            r.passed = r.passed && ok;
            os << "p=" << p << (a0 > 0 ? " conic" : " smooth") << ": max r " << sci(worst) << " vs " << sci(c)
               << ", m=" << state.m << (ok ? "" : " FAIL") << "; ";
            r.metrics.push_back({{"p", p},
                                 {"a0", a0},
                                 {"steps", state.m},
                                 {"max_ratio", worst},
                                 {"bound", c + 1e-3},
                                 {"violations", trace.contraction_violations},
                                 {"envelope_ok", trace.envelope_ok},
                                 {"converged", trace.converged},
                                 {"seconds", secs}});
        }
    }
    r.detail = os.str();
    return r;
}

CriterionResult limit_identification()
{
    CriterionResult r{3, "Ricci limit equals the KE current", true, "", 0, nlohmann::json::array()};
    auto g = make_grid(30, 4096);
    std::ostringstream os;
    for (double a0 : {0.0, 0.5}) {
        DivisorData d = conic_or_empty(a0);
        auto prob = ke_problem(fs_weight(4, g), d);
        auto ke = solve_ke_ode(prob);
        std::vector<std::vector<double>> limits;
        for (int p : {1, 2, 3}) {
            auto [state, trace] = run_ricci(fs_weight(4, g), d, p, 600);
            double fpr = fixed_point_residual(state);
            auto cmp = compare_to_ke(state, ke, prob);
            bool lelong = cmp.lelong_zero_difference == a0 && cmp.lelong_infinity_difference == 0;
            bool ok = trace.converged && fpr <= 1e-6 && cmp.sup_distance <= 1e-5 && lelong;
            r.passed = r.passed && ok;
            limits.push_back(state.weight.scaled(1.0 / p).values());
            os << "p=" << p << (a0 > 0 ? " conic" : " smooth") << ": residual " << sci(fpr) << ", distance "
               << sci(cmp.sup_distance) << ", Lelong diff (" << cmp.lelong_zero_difference << ","
               << cmp.lelong_infinity_difference << ")" << (ok ? "" : " FAIL") << "; ";
            r.metrics.push_back({{"p", p},
                                 {"a0", a0},
                                 {"fixed_point_residual", fpr},
                                 {"ke_distance", cmp.sup_distance},
                                 {"lelong_difference", {cmp.lelong_zero_difference, cmp.lelong_infinity_difference}}});
        }
        double spread = std::max(sup_distance(limits[0], limits[1]), sup_distance(limits[0], limits[2]));
        bool ok = spread <= 1e-5;
        r.passed = r.passed && ok;
        os << "route spread " << sci(spread) << (ok ? "" : " FAIL") << "; ";
    }
    r.detail = os.str();
    return r;
}

CriterionResult gram_oracle(Backend backend)
{
    CriterionResult r{4, "level-1 Gram diagonal (2pi/3, pi/3, 2pi/3)", false, "", 0, {}};
    auto g = make_grid(80, 8801);
    auto tw = fs_weight(4, g);
    auto chain = make_weight_chain(1, tw, {}, tw, tw, 1);
    auto basis = section_range(1, 1, 4, {});
    auto gd = gram_diagonal(basis, chain, nullptr, backend);
    const double pi = std::numbers::pi;
    const double expect[3] = {2 * pi / 3, pi / 3, 2 * pi / 3};
    double worst = 0;
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(std::exp(gd.log_gram[j]) / expect[j] - 1));
    r.passed = basis.dimension() == 3 && worst <= 1e-8;
    r.detail = "max relative error " + sci(worst) + " (bound 1e-8)";
    r.metrics = {{"relative_error", worst},
                 {"gram", {std::exp(gd.log_gram[0]), std::exp(gd.log_gram[1]), std::exp(gd.log_gram[2])}}};
    return r;
}

}  // namespace

BergmanExperiment run_bergman_experiment(const std::string& name, double k, int p, const DivisorData& d,
                                         int levels, Backend backend, double half_width, int node_count)
{
    auto t0 = Clock::now();
    for (int attempt = 0; attempt < 4; ++attempt) {
        auto g = make_grid(half_width, node_count);
        auto tw = fs_weight(k, g);
        auto prob = ke_problem(tw, d);
        auto ke = solve_ke_ode(prob);
        // the Bergman target comes from the Ricci route; the direct solve must agree first
        auto [state, trace] = run_ricci(tw, d, std::max(p, 2), 600);
        BergmanExperiment ex;
        ex.name = name;
        ex.p = p;
        ex.half_width = half_width;
        ex.route_agreement = compare_to_ke(state, ke, prob).sup_distance;
        if (!trace.converged || ex.route_agreement > 1e-5) {
            ex.seconds = seconds_since(t0);
            return ex;
        }
        WeightChain chain = p == 1 ? make_weight_chain(1, tw, d, ke.solution, ke.solution, 1)
                                   : make_weight_chain(p, tw, d, *state.previous, state.weight, state.m);
        try {
            ex.run = run_bergman(chain, levels, backend);
        } catch (const DecayGuardError&) {
            half_width *= 1.5;
            node_count = static_cast<int>(std::lround((node_count - 1) * 1.5)) + 1;
            continue;
        }
        ex.seconds = seconds_since(t0);
        return ex;
    }
    throw ConfigurationError("run_bergman_experiment: decay guard still failing after widening the grid");
}

AcceptanceSuite::AcceptanceSuite(SuiteOptions opts) : opts_(opts) {}

const BergmanExperiment& AcceptanceSuite::bergman(const std::string& name)
{
    auto it = bergman_.find(name);
    if (it != bergman_.end()) return it->second;
    BergmanExperiment ex = name == "smooth"
                               ? run_bergman_experiment(name, 4, 1, {}, opts_.bergman_levels, opts_.backend)
                               : run_bergman_experiment(name, 4, 2, conic_divisor(0.5), opts_.bergman_levels, opts_.backend);
    return bergman_.emplace(name, std::move(ex)).first->second;
}

CriterionResult AcceptanceSuite::run(int id)
{
    auto t0 = Clock::now();
    CriterionResult r;
    try {
        switch (id) {
        case 1: r = fs_oracle(); break;
        case 2: r = contraction(); break;
        case 3: r = limit_identification(); break;
        case 4: r = gram_oracle(opts_.backend); break;
        case 5: {
            r = {5, "renormalized Bergman kernels converge", true, "", 0, nlohmann::json::array()};
            std::ostringstream os;
            for (const char* name : {"smooth", "conic"}) {
                const auto& ex = bergman(name);
                const double bound = std::string(name) == "smooth" ? 0.05 : 0.1;
                bool routes = ex.route_agreement <= 1e-5;
                if (!routes || ex.run.rows.size() < 3) {
                    r.passed = false;
                    os << name << ": route agreement " << sci(ex.route_agreement) << " FAIL; ";
                    continue;
                }
                auto v = convergence_check(ex.run.rows);
                bool ok = v.final_distance <= bound && v.monotone && ex.seconds < 300 &&
                          ex.run.rows.back().level == opts_.bergman_levels;
                r.passed = r.passed && ok;
                os << name << ": d(" << ex.run.rows.back().level << ") = " << sci(v.final_distance) << " (bound "
                   << bound << "), monotone from l=20 " << (v.monotone ? "yes" : "no") << ", routes "
                   << sci(ex.route_agreement) << ", " << sci(ex.seconds) << " s" << (ok ? "" : " FAIL") << "; ";
                r.metrics.push_back({{"config", name},
                                     {"final_distance", v.final_distance},
                                     {"bound", bound},
                                     {"monotone", v.monotone},
                                     {"lower_bound", v.lower_bound},
                                     {"fit_log", v.fit_log},
                                     {"fit_inv", v.fit_inv},
                                     {"route_agreement", ex.route_agreement},
                                     {"half_width", ex.half_width},
                                     {"seconds", ex.seconds}});
            }
            r.detail = os.str();
            break;
        }
        case 6: {
            r = {6, "finite-level integral chain and N_l", true, "", 0, nlohmann::json::array()};
            std::ostringstream os;
            for (const char* name : {"smooth", "conic"}) {
                const auto& ex = bergman(name);
                if (ex.run.rows.empty()) {
                    r.passed = false;
                    os << name << ": no Bergman run FAIL; ";
                    continue;
                }
                auto v = integral_chain_check(ex.run.rows, ex.p, 2.0);
                bool ok = v.holds && v.dimensions_exact;
                r.passed = r.passed && ok;
                os << name << ": worst slack " << sci(v.worst_slack) << ", N_l exact "
                   << (v.dimensions_exact ? "yes" : "no") << (ok ? "" : " FAIL") << "; ";
                r.metrics.push_back({{"config", name},
                                     {"worst_slack", v.worst_slack},
                                     {"holds", v.holds},
                                     {"dimensions_exact", v.dimensions_exact},
                                     {"asymptotic", ex.run.rows.back().asymptotic}});
            }
            r.detail = os.str();
            break;
        }
        case 7: {
            r = {7, "KE potential maximizes G; energy first variation", true, "", 0, {}};
            auto g = make_grid(30, 4096);
            std::mt19937_64 rng(opts_.seed);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            double worst_gap = std::numeric_limits<double>::infinity(), worst_fd = 0;
            for (double a0 : {0.0, 0.5}) {
                auto prob = ke_problem(fs_weight(4, g), conic_or_empty(a0));
                auto rep = solve_ke_ode(prob);
                auto mu = ke_measure(prob);
                const double g0 = g_functional(rep.potential, prob.background, mu);
                for (int s = 0; s < 100; ++s) {
                    double amp = 0.1 * (1 - unit(rng)) * (unit(rng) < 0.5 ? -1 : 1);
                    double c = -10 + 20 * unit(rng), w = 0.5 + 2.5 * unit(rng);
                    auto phi = rep.potential;
                    for (int i = 0; i < g->node_count; ++i) {
                        double x = ((*g)[i] - c) / w;
                        phi[i] += amp * std::exp(-0.5 * x * x);
                    }
                    worst_gap = std::min(worst_gap, g0 - g_functional(phi, prob.background, mu));
                }
                for (int s = 0; s < 10; ++s) {
                    double c1 = -5 + 10 * unit(rng), c2 = -5 + 10 * unit(rng);
                    double a = unit(rng), b = 0.1 * unit(rng);
                    std::vector<double> phi(g->node_count), v(g->node_count), moved(g->node_count), prod(g->node_count);
                    const double step = 1e-5;
                    for (int i = 0; i < g->node_count; ++i) {
                        double t = (*g)[i];
                        phi[i] = a * std::exp(-0.25 * (t - c1) * (t - c1));
                        v[i] = b * std::exp(-0.5 * (t - c2) * (t - c2));
                        moved[i] = phi[i] + step * v[i];
                    }
                    auto dens = energy_density(phi, prob.background);
                    for (int i = 0; i < g->node_count; ++i) prod[i] = v[i] * dens[i];
                    double fd = (energy(moved, prob.background) - energy(phi, prob.background)) / step;
                    worst_fd = std::max(worst_fd, std::abs(fd - trapezoid(prod, g->spacing)));
                }
            }
            r.passed = worst_gap >= 0 && worst_fd <= 1e-6;
            r.detail = "min G(phi*) - G(phi* + v) over 200 perturbations " + sci(worst_gap) +
                       ", worst first-variation error " + sci(worst_fd) + " (bound 1e-6), seed " +
                       std::to_string(opts_.seed);
            r.metrics = {{"min_gap", worst_gap}, {"first_variation_error", worst_fd}, {"seed", opts_.seed}};
            break;
        }
        case 8: {
            r = {8, "regularization diagonal converges", true, "", 0, nlohmann::json::array()};
            auto g = make_grid(30, 4096);
            auto sched = halving_schedule(0.1, 10);
            DivisorData d = conic_divisor(0.5, 1.0);
            std::ostringstream os;
            for (int kinked = 0; kinked < 2; ++kinked) {
                auto tw = kinked ? fs_weight(3, g) + kink_weight(0, 1, g) : fs_weight(4, g);
                auto base = ke_problem(tw, d);
                auto diag = regularized_diagonal(base, sched, sched);
                auto ref = solve_ke_ode(base);
                double dist = sup_distance(diag.diagonal.back().report.potential, ref.potential);
                bool ok = diag.cauchy && dist < 1e-3;
                r.passed = r.passed && ok;
                os << (kinked ? "kinked" : "smooth") << " twist: distance " << sci(dist) << " (bound 1e-3)"
                   << (ok ? "" : " FAIL") << "; ";
                r.metrics.push_back({{"twist", kinked ? "kinked" : "smooth"},
                                     {"distance", dist},
                                     {"trace", diag.trace},
                                     {"cauchy", diag.cauchy}});
            }
            r.detail = os.str();
            break;
        }
        case 9: {
            r = {9, "relative KE weight is jointly positive", true, "", 0, nlohmann::json::array()};
            auto g = make_grid(30, 1024);
            auto base = make_base_grid(-3, 3, 41);
            std::ostringstream os;
            for (auto kind : {FamilyKind::product, FamilyKind::perturbed, FamilyKind::conic, FamilyKind::control}) {
                FamilyRecipe rec;
                rec.kind = kind;
                rec.bypass_precheck = kind == FamilyKind::control;
                auto fam = build_family(rec, base, g);
                auto rel = solve_fiberwise(fam, 1e-10, opts_.backend);
                auto cert = base_positivity_check(rel, fam, 1e-6);
                bool expected = kind != FamilyKind::control;
                bool ok = cert.passed == expected;
                r.passed = r.passed && ok;
                os << to_string(kind) << ": " << (cert.passed ? "positive" : "not positive") << " (margin "
                   << sci(cert.worst_margin) << ")" << (ok ? "" : " FAIL") << "; ";
                r.metrics.push_back({{"family", to_string(kind)},
                                     {"passed", cert.passed},
                                     {"expected", expected},
                                     {"worst_margin", cert.worst_margin},
                                     {"min_det", cert.min_det},
                                     {"min_tt", cert.min_tt}});
            }
            r.detail = os.str();
            break;
        }
        case 10: {
            r = {10, "Narasimhan-Simha convexity and uniform sup bound", true, "", 0, nlohmann::json::array()};
            auto g = make_grid(30, 1024), g2 = make_grid(30, 2047);
            auto base = make_base_grid(-3, 3, 41);
            std::ostringstream os;
            for (auto kind : {FamilyKind::product, FamilyKind::perturbed, FamilyKind::conic}) {
                FamilyRecipe rec;
                rec.kind = kind;
                auto fam = build_family(rec, base, g);
                double worst = std::numeric_limits<double>::infinity();
                int checked = 0;
                for (int m : {1, 2, 3}) {
                    for (int j : admissible_exponents(m, fam)) {
                        worst = std::min(worst, ns_convexity_check(j, m, fam).min_second_difference);
                        ++checked;
                    }
                }
                auto fam2 = build_family(rec, base, g2);
                double b1 = uniform_sup_check(solve_fiberwise(fam, 1e-10, opts_.backend), fam, -2, 2);
                double b2 = uniform_sup_check(solve_fiberwise(fam2, 1e-10, opts_.backend), fam2, -2, 2);
                double drift = std::abs(b1 - b2);
                bool ok = checked > 0 && worst >= -1e-8 && std::isfinite(b1) && drift <= 1e-4;
                r.passed = r.passed && ok;
                os << to_string(kind) << ": min second difference " << sci(worst) << " over " << checked
                   << " (j,m), sup bound " << sci(b1) << " drift " << sci(drift) << (ok ? "" : " FAIL") << "; ";
                r.metrics.push_back({{"family", to_string(kind)},
                                     {"min_second_difference", worst},
                                     {"pairs", checked},
                                     {"sup_bound", b1},
                                     {"drift", drift}});
            }
            r.detail = os.str();
            break;
        }
        default: throw std::invalid_argument("unknown acceptance criterion " + std::to_string(id));
        }
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        r.id = id;
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = seconds_since(t0);
    return r;
}

std::vector<CriterionResult> AcceptanceSuite::run_all(const std::vector<int>& ids)
{
    std::vector<CriterionResult> out;
    for (int id : ids) out.push_back(run(id));
    return out;
}

std::string format_result_line(const CriterionResult& r)
{
    char head[64];
    std::snprintf(head, sizeof head, "criterion %2d [%s] ", r.id, r.passed ? "PASS" : "FAIL");
    char tail[32];
    std::snprintf(tail, sizeof tail, " (%.2f s)", r.seconds);
    std::string detail = r.detail;
    while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
    return head + r.title + ": " + detail + tail;
}

}  // namespace kelab
