#include "kelab/family.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "kelab/bergman.hpp"
#include "kelab/errors.hpp"
#include "kelab/numerics.hpp"

namespace kelab {

namespace {

struct Profile {
    double v, d1, d2;
};

Profile perturbation(Perturbation kind, double c, double t)
{
    switch (kind) {
    case Perturbation::logistic: {
        double s = logistic(t), q = s * logistic(-t);
        return {c * s, c * q, c * q * (1 - 2 * s)};
    }
    case Perturbation::inverse_quadratic: {
        double r = 1 + t * t;
        return {c / r, -2 * c * t / (r * r), c * (6 * t * t - 2) / (r * r * r)};
    }
    case Perturbation::log_log: {
        double a = softplus(t), b = softplus(-t), s = logistic(t), q = s * logistic(-t);
        return {c * a * b, c * (s * b - a * (1 - s)), c * q * (a + b - 2)};
    }
    }
    throw std::invalid_argument("unknown perturbation profile");
}

RadialWeight fiber_twist(const FamilyRecipe& r, const GridPtr& g, double s)
{
    RadialWeight w = fs_weight(r.k, g);
    if (r.kind == FamilyKind::perturbed || r.kind == FamilyKind::conic) {
        const auto n = static_cast<std::size_t>(g->node_count);
        std::vector<double> v(n), d1(n), d2(n);
        const double lam = std::exp(s);
        for (std::size_t i = 0; i < n; ++i) {
            Profile p = perturbation(r.profile, r.amplitude, g->nodes[i]);
            v[i] = lam * p.v;
            d1[i] = lam * p.d1;
            d2[i] = lam * p.d2;
        }
        w = w + RadialWeight(g, std::move(v), std::move(d1), std::move(d2), 0.0, 0.0);
    }
    if (r.kind == FamilyKind::control) w = w - r.beta * s * s;
    return w;
}

}  // namespace

std::string to_string(FamilyKind kind)
{
    switch (kind) {
    case FamilyKind::product: return "product";
    case FamilyKind::perturbed: return "perturbed";
    case FamilyKind::conic: return "conic";
    case FamilyKind::control: return "control";
    }
    return "unknown";
}

FamilyKind family_kind_from_string(const std::string& s)
{
    for (auto k : {FamilyKind::product, FamilyKind::perturbed, FamilyKind::conic, FamilyKind::control})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown family kind '" + s + "'");
}

BaseGrid make_base_grid(double s_min, double s_max, int count)
{
    if (!std::isfinite(s_min) || !std::isfinite(s_max) || !(s_max > s_min))
        throw std::invalid_argument("make_base_grid: need s_min < s_max");
    if (count < 1) throw std::invalid_argument("make_base_grid: need at least one node");
    BaseGrid b;
    b.spacing = count > 1 ? (s_max - s_min) / (count - 1) : 0.0;
    for (int i = 0; i < count; ++i) b.nodes.push_back(count > 1 ? s_min + i * b.spacing : s_min);
    return b;
}

HessianCertificate joint_hessian_check(const std::vector<std::vector<double>>& u, const RadialGrid& fiber,
                                       const BaseGrid& base, double tol)
{
    const std::size_t nb = base.size();
    const std::size_t nt = static_cast<std::size_t>(fiber.node_count);
    if (u.size() != nb) throw std::invalid_argument("joint_hessian_check: one column per base node required");
    for (const auto& c : u)
        if (c.size() != nt) throw std::invalid_argument("joint_hessian_check: column length mismatch");
    HessianCertificate cert;
    cert.tol = tol;
    cert.min_tt = cert.min_ss = cert.min_det = std::numeric_limits<double>::infinity();
    cert.worst_margin = std::numeric_limits<double>::infinity();
    if (nb < 3) {
        // no interior base node: only fibrewise convexity can be tested
        cert.min_ss = cert.min_det = 0;
    }
    const double ht = fiber.spacing, hs = base.spacing;
    for (std::size_t j = 0; j < nb; ++j) {
        for (std::size_t i = 1; i + 1 < nt; ++i) {
            double tt = (u[j][i + 1] - 2 * u[j][i] + u[j][i - 1]) / (ht * ht);
            double ss = 0, ts = 0, det = 0;
            const bool interior = j > 0 && j + 1 < nb;
            if (interior) {
                ss = (u[j + 1][i] - 2 * u[j][i] + u[j - 1][i]) / (hs * hs);
                ts = (u[j + 1][i + 1] - u[j - 1][i + 1] - u[j + 1][i - 1] + u[j - 1][i - 1]) / (4 * ht * hs);
                det = tt * ss - ts * ts;
            } else if (nb >= 3) {
                continue;
            }
            double scale = std::max({1.0, std::abs(tt), std::abs(ss), std::abs(ts)});
            double margin = std::min({tt / scale, interior ? ss / scale : 0.0, interior ? det / (scale * scale) : 0.0});
            cert.min_tt = std::min(cert.min_tt, tt);
            if (interior) {
                cert.min_ss = std::min(cert.min_ss, ss);
                cert.min_det = std::min(cert.min_det, det);
                cert.max_mixed = std::max(cert.max_mixed, std::abs(ts));
                cert.max_ss = std::max(cert.max_ss, std::abs(ss));
            }
            if (margin < cert.worst_margin) {
                cert.worst_margin = margin;
                cert.worst_t = fiber.nodes[i];
                cert.worst_s = base.nodes[j];
            }
        }
    }
    cert.passed = cert.worst_margin >= -tol;
    return cert;
}

FiberFamily build_family(const FamilyRecipe& recipe, const BaseGrid& base, const GridPtr& fiber, double precheck_tol)
{
    if (!std::isfinite(recipe.k) || !(recipe.k > 2)) throw std::invalid_argument("build_family: k must exceed 2");
    if (!std::isfinite(recipe.amplitude) || recipe.amplitude < 0)
        throw std::invalid_argument("build_family: amplitude must be >= 0");
    if (base.size() == 0) throw std::invalid_argument("build_family: empty base grid");
    FiberFamily fam;
    fam.recipe = recipe;
    fam.base = base;
    fam.fiber = fiber;
    if (recipe.kind == FamilyKind::conic) fam.divisor = conic_divisor(recipe.a0);
    for (double s : base.nodes) fam.twists.push_back(fiber_twist(recipe, fiber, s));
    std::vector<std::vector<double>> m;
    for (const auto& w : fam.twists) m.push_back(w.values());
    fam.precheck = joint_hessian_check(m, *fiber, base, precheck_tol);
    if (!fam.precheck.passed && !recipe.bypass_precheck) {
        std::ostringstream os;
        os << "build_family: twist is not jointly positive at (t, s) = (" << fam.precheck.worst_t << ", "
           << fam.precheck.worst_s << "), scaled margin " << fam.precheck.worst_margin;
        throw ConfigurationError(os.str());
    }
    return fam;
}

RelativePotential solve_fiberwise(const FiberFamily& family, double tol, Backend backend)
{
    const std::size_t nb = family.base.size();
    std::vector<std::optional<SolveReport>> reps(nb);
    std::vector<std::string> errors(nb);
    auto solve_one = [&](std::size_t j) {
        try {
            reps[j] = solve_ke_ode(ke_problem(family.twists[j], family.divisor), tol);
        } catch (const std::exception& e) {
            errors[j] = e.what();
        }
    };
    if (backend == Backend::serial) {
        for (std::size_t j = 0; j < nb; ++j) solve_one(j);
    } else {
        const long n = static_cast<long>(nb);
#pragma omp parallel for schedule(dynamic)
        for (long j = 0; j < n; ++j) solve_one(static_cast<std::size_t>(j));
    }
    RelativePotential rel;
    for (std::size_t j = 0; j < nb; ++j) {
        if (!reps[j]) throw FiberSolveError("fibre " + std::to_string(j) + ": " + errors[j], j);
        rel.columns.push_back(ke_current(*reps[j], family.divisor).values());
        rel.reports.push_back(std::move(*reps[j]));
    }
    return rel;
}

HessianCertificate base_positivity_check(const RelativePotential& rel, const FiberFamily& family, double tol)
{
    return joint_hessian_check(rel.columns, *family.fiber, family.base, tol);
}

double uniform_sup_check(const RelativePotential& rel, const FiberFamily& family, double s_lo, double s_hi)
{
    if (rel.columns.size() != family.base.size()) throw std::invalid_argument("uniform_sup_check: size mismatch");
    const double mass = family.recipe.k - 2;
    const double a0 = family.divisor.coefficient_at(SupportPoint::zero);
    const RadialGrid& g = *family.fiber;
    const double slack = 1e-9 * std::max(1.0, family.base.spacing);
    double bound = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < family.base.size(); ++j) {
        double s = family.base.nodes[j];
        if (s < s_lo - slack || s > s_hi + slack) continue;
        any = true;
        for (int i = 0; i < g.node_count; ++i)
            bound = std::max(bound, rel.columns[j][i] - (mass * softplus(g.nodes[i]) + a0 * g.nodes[i]));
    }
    if (!any) throw std::invalid_argument("uniform_sup_check: no fibres in the requested base range");
    if (!std::isfinite(bound)) throw std::runtime_error("uniform_sup_check: bound is not finite");
    return bound;
}

double ns_log_norm(int j, int m, std::size_t fiber, const FiberFamily& family)
{
    if (m < 1) throw std::invalid_argument("ns_norm: m must be >= 1");
    if (fiber >= family.twists.size()) throw std::invalid_argument("ns_norm: fibre index out of range");
    const RadialWeight& tw = family.twists[fiber];
    const double a0 = family.divisor.coefficient_at(SupportPoint::zero);
    const double ainf = family.divisor.coefficient_at(SupportPoint::infinity);
    const double x = static_cast<double>(j) / m;
    double left = x + 1 - tw.slope_minus() + a0;
    double right = x + 1 - tw.slope_plus() - ainf;
    if (!(left > 0) || !(right < 0)) {
        std::ostringstream os;
        os << "ns_norm: z^" << j << " is not integrable for m = " << m << " (slopes " << left << ", " << right << ")";
        throw ConfigurationError(os.str());
    }
    const RadialGrid& g = *family.fiber;
    auto lf = log_divisor_frame_norm(family.divisor, g, 0.0);
    std::vector<double> a(g.nodes.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = (x + 1) * g.nodes[i] - tw.values()[i] + lf[i];
    return m * (std::log(2 * std::numbers::pi) + log_trapezoid_exp(a, g.spacing));
}

double ns_norm(int j, int m, std::size_t fiber, const FiberFamily& family)
{
    return std::exp(ns_log_norm(j, m, fiber, family));
}

std::vector<int> admissible_exponents(int m, const FiberFamily& family)
{
    if (m < 1) throw std::invalid_argument("admissible_exponents: m must be >= 1");
    std::vector<int> out;
    const int top = static_cast<int>(std::floor(m * (family.recipe.k - 2) + 1e-9));
    for (int j = 0; j <= top; ++j) {
        try {
            ns_log_norm(j, m, 0, family);
            out.push_back(j);
        } catch (const ConfigurationError&) {
        }
    }
    return out;
}

NSCertificate ns_convexity_check(int j, int m, const FiberFamily& family, double tol)
{
    const std::size_t nb = family.base.size();
    if (nb < 3) throw std::invalid_argument("ns_convexity_check: need at least 3 base nodes");
    NSCertificate cert;
    for (std::size_t b = 0; b < nb; ++b) cert.values.push_back(-ns_log_norm(j, m, b, family));
    cert.min_second_difference = std::numeric_limits<double>::infinity();
    const double hs = family.base.spacing;
    for (std::size_t b = 1; b + 1 < nb; ++b)
        cert.min_second_difference = std::min(
            cert.min_second_difference, (cert.values[b + 1] - 2 * cert.values[b] + cert.values[b - 1]) / (hs * hs));
    cert.passed = cert.min_second_difference >= -tol;
    return cert;
}

HessianCertificate family_bergman_convexity(const FiberFamily& family, int levels, double tol, Backend backend)
{
    if (levels < 1) throw std::invalid_argument("family_bergman_convexity: levels must be >= 1");
    const std::size_t nb = family.base.size();
    std::vector<std::optional<BergmanLevel>> current(nb);
    std::vector<WeightChain> chains;
    for (std::size_t b = 0; b < nb; ++b) {
        const RadialWeight& tw = family.twists[b];
        chains.push_back(make_weight_chain(1, tw, family.divisor, tw, tw, 1));
    }
    HessianCertificate worst;
    worst.worst_margin = std::numeric_limits<double>::infinity();
    for (int l = 1; l <= levels; ++l) {
        std::vector<std::vector<double>> kap(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            BergmanLevel next = bergman_step(current[b] ? &*current[b] : nullptr, chains[b], backend);
            kap[b] = next.kappa;
            current[b] = std::move(next);
        }
        auto cert = joint_hessian_check(kap, *family.fiber, family.base, tol);
        if (cert.worst_margin < worst.worst_margin) worst = cert;
    }
    return worst;
}

}  // namespace kelab
