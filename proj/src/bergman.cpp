#include "kelab/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kelab/numerics.hpp"

namespace kelab {

namespace {

constexpr double kVanishTol = 1e-9;
const double kGuard = std::log(1e-30);

long ceil_tol(double x) { return static_cast<long>(std::ceil(x - kVanishTol)); }

double frac_part(double x)
{
    double f = static_cast<double>(ceil_tol(x)) - x;
    return std::abs(f) < kVanishTol ? 0.0 : f;
}

std::vector<double> fractional_log_frame(const SectionBasis& b, const RadialGrid& g, double eps)
{
    std::vector<double> out(g.nodes.size(), 0.0);
    if (b.frac_zero > 0) {
        auto lf = log_frame_norm(SupportPoint::zero, g, eps);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.frac_zero * lf[i];
    }
    if (b.frac_infinity > 0) {
        auto lf = log_frame_norm(SupportPoint::infinity, g, eps);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.frac_infinity * lf[i];
    }
    return out;
}

}  // namespace

SectionBasis section_range(int level, int p, double twist_degree, const DivisorData& divisor, double delta)
{
    if (level < 1) throw std::invalid_argument("section_range: level must be >= 1");
    if (p < 1) throw std::invalid_argument("section_range: p must be >= 1");
    if (!(twist_degree > 2)) throw ConfigurationError("section_range: twist degree must exceed 2");
    SectionBasis b;
    b.level = level;
    b.p = p;
    b.twist_degree = twist_degree;
    b.divisor = divisor.perturbed(delta);
    const double lp = static_cast<double>(level) * p;
    const double deg = lp * (twist_degree - 2 + divisor.total());
    if (std::abs(deg - std::round(deg)) > kVanishTol)
        throw ConfigurationError("section_range: level degree " + std::to_string(deg) + " is not integral");
    b.degree = static_cast<int>(std::lround(deg));
    const double x0 = lp * b.divisor.coefficient_at(SupportPoint::zero);
    const double xi = lp * b.divisor.coefficient_at(SupportPoint::infinity);
    b.j_min = static_cast<int>(ceil_tol(x0));
    b.j_max = b.degree - static_cast<int>(ceil_tol(xi));
    b.frac_zero = frac_part(x0);
    b.frac_infinity = frac_part(xi);
    if (b.j_max < b.j_min) throw ConfigurationError("section_range: no sections at this level");
    return b;
}

WeightChain make_weight_chain(int p, const RadialWeight& twist, const DivisorData& divisor,
                              const RadialWeight& w_prev, const RadialWeight& w_m, int m, double eps)
{
    if (p < 1) throw std::invalid_argument("make_weight_chain: p must be >= 1");
    const GridPtr& g = twist.grid();
    RadialWeight phi_e = divisor_weight(divisor, g, eps);
    RadialWeight phi_l = twist;
    for (const auto& part : divisor.parts)
        if (part.coefficient > 0) phi_l = phi_l + fs_weight(part.coefficient, g);
    phi_l = phi_l - std::log(static_cast<double>(p));
    RadialWeight tau = phi_l;
    if (p > 1) tau = tau + (w_prev.scaled(1.0 / p) + phi_e).scaled(p - 1.0);
    return WeightChain{m, p, twist.bundle_degree(), divisor, eps, std::move(tau), w_m + phi_e.scaled(p)};
}

GramDiagonal gram_diagonal(const SectionBasis& b, const WeightChain& chain, const BergmanLevel* prev,
                           Backend backend)
{
    const RadialGrid& g = *chain.tau.grid();
    const std::size_t n = g.nodes.size();
    if (prev && prev->kappa.size() != n) throw std::invalid_argument("gram_diagonal: previous level on another grid");
    const double k_minus = prev ? prev->basis.j_min : 0.0;
    const double k_plus = prev ? prev->basis.j_max : 0.0;
    const bool sharp = chain.epsilon == 0;
    double left = b.j_min + 1 - k_minus - chain.tau.slope_minus() + (sharp ? b.frac_zero : 0.0);
    double right = b.j_max + 1 - k_plus - chain.tau.slope_plus() - (sharp ? b.frac_infinity : 0.0);
    if (!(left > 0) || !(right < 0)) {
        std::ostringstream os;
        os << "gram_diagonal: integrand not integrable at level " << b.level << ", slope " << left
           << " at -inf and " << right << " at +inf";
        throw ConfigurationError(os.str());
    }
    auto base = fractional_log_frame(b, g, chain.epsilon);
    for (std::size_t i = 0; i < n; ++i)
        base[i] += g.nodes[i] - chain.tau.values()[i] - (prev ? prev->kappa[i] : 0.0);
    GramDiagonal gd = gram_diagonal_kernel(g.nodes, base, g.spacing, b.j_min, b.j_max, backend);
    for (std::size_t q = 0; q < gd.log_gram.size(); ++q) {
        if (gd.log_edge[q] - gd.log_peak[q] > kGuard) {
            std::ostringstream os;
            os << "gram_diagonal: integrand for j = " << b.j_min + static_cast<int>(q)
               << " has not decayed at the grid ends (T = " << g.half_width << ")";
            throw DecayGuardError(os.str());
        }
    }
    return gd;
}

BergmanLevel bergman_step(const BergmanLevel* prev, const WeightChain& chain, Backend backend)
{
    const int level = prev ? prev->basis.level + 1 : 1;
    SectionBasis b = section_range(level, chain.p, chain.twist_degree, chain.divisor);
    GramDiagonal gd = gram_diagonal(b, chain, prev, backend);
    auto kappa = kernel_profile(chain.tau.grid()->nodes, gd.log_gram, b.j_min, backend);
    return BergmanLevel{std::move(b), std::move(gd.log_gram), std::move(kappa), chain.tau.grid()};
}

std::vector<double> renormalized_profile(const BergmanLevel& level)
{
    const double l = level.basis.level;
    const double lf = std::lgamma(l + 1);
    std::vector<double> out(level.kappa.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (level.kappa[i] - lf) / l;
    return out;
}

double chain_integral(const BergmanLevel& level, const WeightChain& chain)
{
    if (!level.basis.integral_vanishing())
        throw ConfigurationError("chain_integral: fractional vanishing orders at this level");
    const RadialGrid& g = *chain.tau.grid();
    const double l = level.basis.level;
    std::vector<double> a(g.nodes.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = level.kappa[i] / l - chain.tau.values()[i] + g.nodes[i];
    return 2 * std::numbers::pi * std::exp(log_trapezoid_exp(a, g.spacing));
}

std::vector<double> c_ell_reference(const BergmanLevel& level, const WeightChain& chain)
{
    const RadialGrid& g = *chain.tau.grid();
    auto ref = fractional_log_frame(level.basis, g, chain.epsilon);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += level.basis.level * chain.target.values()[i];
    return ref;
}

double c_ell_diagnostic(const BergmanLevel& level, const std::vector<double>& reference)
{
    const std::size_t n = level.kappa.size();
    if (reference.size() != n || n < 3) throw std::invalid_argument("c_ell_diagnostic: length mismatch");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = level.kappa[i] - reference[i];
    // a wrong reference leaves a nonzero end slope and the infimum escapes to the boundary
    const double h = level.grid->spacing;
    const double left = (d[1] - d[0]) / h, right = (d[n - 1] - d[n - 2]) / h;
    if (std::abs(left) > 0.25 || std::abs(right) > 0.25) {
        std::ostringstream os;
        os << "c_ell_diagnostic: reference slopes do not match the kernel (end slopes " << left << ", " << right
           << ")";
        throw ConfigurationError(os.str());
    }
    double inf = *std::min_element(d.begin(), d.end());
    return inf;
}

BergmanRun run_bergman(const WeightChain& chain, int max_level, Backend backend, double window)
{
    if (max_level < 1) throw std::invalid_argument("run_bergman: max_level must be >= 1");
    const RadialGrid& g = *chain.tau.grid();
    auto [lo, hi] = g.index_range(-window, window);
    BergmanRun run;
    std::optional<BergmanLevel> prev;
    double log_prod_n = 0;
    double prev_c = 0;
    for (int l = 1; l <= max_level; ++l) {
        BergmanLevel cur = bergman_step(prev ? &*prev : nullptr, chain, backend);
        BergmanTraceRow row;
        row.level = l;
        row.dimension = cur.basis.dimension();
        row.log_gram_min = *std::min_element(cur.log_gram.begin(), cur.log_gram.end());
        row.log_gram_max = *std::max_element(cur.log_gram.begin(), cur.log_gram.end());
        auto rn = renormalized_profile(cur);
        const double slack = (1 + std::log(static_cast<double>(l))) / l;
        row.distance = 0;
        row.lower_margin = std::numeric_limits<double>::infinity();
        for (int i = lo; i <= hi; ++i) {
            double diff = rn[i] - chain.target.values()[i];
            row.distance = std::max(row.distance, std::abs(diff));
            row.lower_margin = std::min(row.lower_margin, diff + slack);
        }
        log_prod_n += std::log(static_cast<double>(row.dimension));
        row.chain_bound = std::exp(log_prod_n / l);
        if (cur.basis.integral_vanishing()) {
            row.chain_lhs = chain_integral(cur, chain);
            row.chain_slack = row.chain_lhs / row.chain_bound - 1;
            row.asymptotic = row.chain_lhs / std::exp(std::lgamma(l + 1.0) / l);
        } else {
            row.chain_lhs = row.chain_slack = row.asymptotic = std::numeric_limits<double>::quiet_NaN();
        }
        row.c_ell = c_ell_diagnostic(cur, c_ell_reference(cur, chain));
        row.trend = l >= 2 ? row.c_ell - prev_c - std::log(static_cast<double>(l)) : 0.0;
        prev_c = row.c_ell;
        run.rows.push_back(row);
        prev = std::move(cur);
    }
    run.last = std::move(*prev);
    return run;
}

ConvergenceVerdict convergence_check(const std::vector<BergmanTraceRow>& rows, int monotone_from)
{
    if (rows.size() < 3) throw std::invalid_argument("convergence_check: need a trace of at least 3 levels");
    ConvergenceVerdict v;
    v.monotone = true;
    v.lower_bound = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].lower_margin < 0) v.lower_bound = false;
        if (i > 0 && rows[i].level > monotone_from && rows[i - 1].level >= monotone_from &&
            rows[i].distance > rows[i - 1].distance * (1 + 1e-12))
            v.monotone = false;
    }
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (const auto& r : rows) {
        if (r.level < 2) continue;
        double l = r.level;
        double x1 = std::log(l) / l, x2 = 1 / l;
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * r.distance;
        r2 += x2 * r.distance;
    }
    double det = s11 * s22 - s12 * s12;
    if (det != 0) {
        v.fit_log = (r1 * s22 - r2 * s12) / det;
        v.fit_inv = (s11 * r2 - s12 * r1) / det;
    }
    v.final_distance = rows.back().distance;
    return v;
}

ChainVerdict integral_chain_check(const std::vector<BergmanTraceRow>& rows, int p, double mass, double rel_tol)
{
    if (rows.empty()) throw std::invalid_argument("integral_chain_check: empty trace");
    ChainVerdict v;
    v.holds = true;
    v.dimensions_exact = true;
    v.worst_slack = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (std::isnan(r.chain_lhs)) throw ConfigurationError("integral_chain_check: level without a chain integral");
        v.worst_slack = std::max(v.worst_slack, r.chain_slack);
        if (r.chain_lhs > r.chain_bound * (1 + rel_tol)) v.holds = false;
        if (std::abs(r.dimension - (r.level * p * mass + 1)) > 1e-9) v.dimensions_exact = false;
    }
    return v;
}

}  // namespace kelab
