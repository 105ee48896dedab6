#include "kelab/ma_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kelab/errors.hpp"
#include "kelab/numerics.hpp"

namespace kelab {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void require_grid(const RadialWeight& a, const GridPtr& g, const char* what)
{
    if (a.grid()->node_count != g->node_count || a.grid()->half_width != g->half_width)
        throw std::invalid_argument(std::string("MAProblem: ") + what + " lives on a different grid");
}

// Everything about a problem that does not depend on the unknown correction v.
struct Assembly {
    GridPtr grid;
    double h = 0;
    double mass = 0;
    double s_minus = 0;
    std::vector<double> exponent;  // B: f = exp(B + v)
    std::vector<double> ref, ref1, ref2;
};

Assembly assemble(const MAProblem& p)
{
    const GridPtr& g = p.background.grid();
    require_grid(p.twist, g, "twist");
    if (p.previous) require_grid(*p.previous, g, "previous iterate");
    if (!std::isfinite(p.mass) || p.mass <= 0) throw ConfigurationError("MAProblem: mass target must be positive");
    const double bg_mass = p.background.slope_plus() - p.background.slope_minus();
    if (std::abs(bg_mass - p.mass) > 1e-9 * std::max(1.0, p.mass))
        throw ConfigurationError("MAProblem: mass target differs from the background degree");
    if (!(p.coupling >= 0 && p.coupling < 1)) throw ConfigurationError("MAProblem: coupling must lie in [0, 1)");
    if (p.coupling > 0 && !p.previous) throw ConfigurationError("MAProblem: coupling set without a previous iterate");
    if (!std::isfinite(p.epsilon) || p.epsilon < 0) throw ConfigurationError("MAProblem: eps must be >= 0");

    const double a0 = p.divisor.coefficient_at(SupportPoint::zero);
    const double ainf = p.divisor.coefficient_at(SupportPoint::infinity);
    const double c = p.coupling;
    const double prev_minus = p.previous ? p.previous->slope_minus() : 0.0;
    const double prev_plus = p.previous ? p.previous->slope_plus() : 0.0;
    const double s_minus = p.background.slope_minus();
    const double s_plus = s_minus + p.mass;
    double left = s_minus - p.twist.slope_minus() - c * prev_minus + 1 + (p.epsilon == 0 ? a0 : 0.0);
    double right = s_plus - p.twist.slope_plus() - c * prev_plus + 1 - (p.epsilon == 0 ? ainf : 0.0);
    if (!(left > 0) || !(right < 0)) {
        std::ostringstream os;
        os << "MAProblem: right side not integrable, exponent slopes " << left << " at -inf and " << right
           << " at +inf";
        throw ConfigurationError(os.str());
    }

    Assembly a;
    a.grid = g;
    a.h = g->spacing;
    a.mass = p.mass;
    a.s_minus = s_minus;
    const auto n = static_cast<std::size_t>(g->node_count);
    a.exponent.resize(n);
    a.ref.resize(n);
    a.ref1.resize(n);
    a.ref2.resize(n);
    auto lf = log_divisor_frame_norm(p.divisor, *g, p.epsilon);
    for (std::size_t i = 0; i < n; ++i) {
        double t = g->nodes[i];
        double s = logistic(t);
        a.ref[i] = s_minus * t + p.mass * softplus(t);
        a.ref1[i] = s_minus + p.mass * s;
        a.ref2[i] = p.mass * s * logistic(-t);
        double prev = p.previous ? (*p.previous)[static_cast<int>(i)] : 0.0;
        a.exponent[i] = kLog2Pi + lf[i] - p.twist[static_cast<int>(i)] - c * prev + t + a.ref[i];
    }
    return a;
}

// Fourth-order compact scheme with reflecting ghosts:
// (v_{i+1} - 2 v_i + v_{i-1}) / h² = (g_{i+1} + 10 g_i + g_{i-1}) / 12, g = f - ref''
void residual(const Assembly& a, const std::vector<double>& v, std::vector<double>& f, std::vector<double>& r)
{
    const std::size_t n = v.size();
    f.resize(n);
    r.resize(n);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = std::exp(a.exponent[i] + v[i]);
        g[i] = f[i] - a.ref2[i];
    }
    const double ih2 = 1.0 / (a.h * a.h);
    r[0] = 2 * (v[1] - v[0]) * ih2 - (2 * g[1] + 10 * g[0]) / 12;
    r[n - 1] = 2 * (v[n - 2] - v[n - 1]) * ih2 - (2 * g[n - 2] + 10 * g[n - 1]) / 12;
    for (std::size_t i = 1; i + 1 < n; ++i)
        r[i] = (v[i + 1] - 2 * v[i] + v[i - 1]) * ih2 - (g[i + 1] + 10 * g[i] + g[i - 1]) / 12;
}

std::vector<double> newton_direction(const Assembly& a, const std::vector<double>& f, const std::vector<double>& r)
{
    const std::size_t n = f.size();
    const double ih2 = 1.0 / (a.h * a.h);
    std::vector<double> lo(n), di(n), up(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        di[i] = -2 * ih2 - 10 * f[i] / 12;
        rhs[i] = -r[i];
        if (i > 0) lo[i] = ih2 - f[i - 1] / 12;
        if (i + 1 < n) up[i] = ih2 - f[i + 1] / 12;
    }
    up[0] = 2 * ih2 - 2 * f[1] / 12;
    lo[n - 1] = 2 * ih2 - 2 * f[n - 2] / 12;
    return solve_tridiagonal(lo, di, up, rhs);
}

double roundoff_floor(const Assembly& a, const std::vector<double>& v, const std::vector<double>& f)
{
    double big = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        big = std::max(big, 4 * std::abs(v[i]) / (a.h * a.h) + f[i] * (1 + std::abs(a.exponent[i] + v[i])));
    return 8 * std::numeric_limits<double>::epsilon() * big;
}

}  // namespace

MAProblem ke_problem(const RadialWeight& twist, const DivisorData& divisor, double eps)
{
    const double mass = twist.bundle_degree() - 2;
    if (!(mass > 0)) throw ConfigurationError("ke_problem: twist degree must exceed 2");
    MAProblem p{fs_weight(mass, twist.grid()), twist, std::nullopt, 0.0, divisor, eps, 0.0, mass};
    return p;
}

SolveReport solve_ke_ode(const MAProblem& prob, double tol, int max_iter, const std::vector<double>* init)
{
    if (!(tol > 0)) throw std::invalid_argument("solve_ke_ode: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solve_ke_ode: max_iter must be >= 1");
    const Assembly a = assemble(prob);
    const auto n = static_cast<std::size_t>(a.grid->node_count);

    std::vector<double> v;
    if (init) {
        if (init->size() != n) throw std::invalid_argument("solve_ke_ode: initial correction has wrong length");
        v = *init;
    } else {
        v.assign(n, std::log(a.mass) - log_trapezoid_exp(a.exponent, a.h));
    }

    std::vector<double> f, r, f_try, r_try, v_try(n);
    residual(a, v, f, r);
    double res = sup_norm(r);
    double tol_eff = std::max(tol, roundoff_floor(a, v, f));
    int it = 0;
    bool converged = res <= tol_eff;
    int polish = 0;
    while (it < max_iter && (!converged || polish < 3)) {
        auto dv = newton_direction(a, f, r);
        double lambda = 1;
        bool accepted = false;
        for (int k = 0; k < 40; ++k, lambda *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) v_try[i] = v[i] + lambda * dv[i];
            residual(a, v_try, f_try, r_try);
            double rt = sup_norm(r_try);
            if (std::isfinite(rt) && rt < res) {
                accepted = true;
                res = rt;
                break;
            }
        }
        if (!accepted) break;
        ++it;
        v.swap(v_try);
        f.swap(f_try);
        r.swap(r_try);
        tol_eff = std::max(tol, roundoff_floor(a, v, f));
        if (converged) ++polish;
        converged = converged || res <= tol_eff;
    }
    if (!converged) {
        std::ostringstream os;
        os << "solve_ke_ode: Newton did not converge after " << it << " iterations, residual " << res;
        throw ConvergenceError(os.str(), res);
    }

    std::vector<double> u(n), d1(n), pot(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = a.ref[i] + v[i];
        double dv = (i == 0 || i + 1 == n) ? 0.0 : (v[i + 1] - v[i - 1]) / (2 * a.h);
        d1[i] = a.ref1[i] + dv;
        pot[i] = u[i] - prob.background[static_cast<int>(i)];
    }
    SolveReport rep{RadialWeight(a.grid, std::move(u), std::move(d1), f, a.s_minus, a.s_minus + a.mass,
                                 prob.background.bundle_degree()),
                    std::move(pot), f, it, res, tol_eff, std::abs(trapezoid(f, a.h) - a.mass)};
    return rep;
}

double ma_residual(const MAProblem& prob, const RadialWeight& u)
{
    const Assembly a = assemble(prob);
    require_grid(u, a.grid, "candidate weight");
    std::vector<double> v(u.values().size()), f, r;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u.values()[i] - a.ref[i];
    residual(a, v, f, r);
    return sup_norm(r);
}

RadialWeight ke_current(const SolveReport& rep, const DivisorData& divisor)
{
    return rep.solution + divisor_weight(divisor, rep.solution.grid(), 0.0);
}

MAProblem regularized_problem(const MAProblem& base, double delta, double eps)
{
    if (!std::isfinite(delta) || delta < 0) throw std::invalid_argument("regularized_problem: delta must be >= 0");
    if (!std::isfinite(eps) || eps < 0) throw std::invalid_argument("regularized_problem: eps must be >= 0");
    const double shift = delta * base.divisor.total_kodaira();
    const double mass = base.mass - shift;
    if (!(mass > 0)) throw ConfigurationError("regularized_problem: delta too large for the class");
    MAProblem p = base;
    p.background = base.background.scaled(mass / base.mass);
    p.twist = base.twist - fs_weight(shift, base.twist.grid());
    if (eps > 0) p.twist = mollify_weight(p.twist, eps);
    p.epsilon = eps;
    p.delta = delta;
    p.mass = mass;
    return p;
}

std::vector<double> halving_schedule(double start, int steps)
{
    if (!(start > 0) || steps < 1) throw std::invalid_argument("halving_schedule: bad arguments");
    std::vector<double> s(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) s[i] = start * std::ldexp(1.0, -i);
    return s;
}

namespace {

void require_schedule(const std::vector<double>& s, const char* name)
{
    if (s.empty()) throw std::invalid_argument(std::string("regularized_diagonal: empty ") + name + " schedule");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0) || !std::isfinite(s[i]))
            throw std::invalid_argument(std::string("regularized_diagonal: ") + name + " schedule must be positive");
        if (i > 0 && !(s[i] < s[i - 1]))
            throw std::invalid_argument(std::string("regularized_diagonal: ") + name +
                                        " schedule must be strictly decreasing");
    }
}

}  // namespace

DiagonalResult regularized_diagonal(const MAProblem& base, const std::vector<double>& deltas,
                                    const std::vector<double>& epsilons, double tol)
{
    require_schedule(deltas, "delta");
    require_schedule(epsilons, "eps");
    DiagonalResult out;
    double delta_cap = std::numeric_limits<double>::infinity();
    for (double eps : epsilons) {
        std::vector<SolveReport> column;
        column.reserve(deltas.size());
        for (double d : deltas) column.push_back(solve_ke_ode(regularized_problem(base, d, eps), tol));
        const auto& last = column.back().potential;
        std::size_t pick = deltas.size() - 1;
        for (std::size_t j = 0; j < deltas.size(); ++j) {
            if (deltas[j] > delta_cap) continue;
            if (sup_distance(column[j].potential, last) <= eps) {
                pick = j;
                break;
            }
        }
        delta_cap = deltas[pick];
        if (!out.diagonal.empty())
            out.trace.push_back(sup_distance(out.diagonal.back().report.potential, column[pick].potential));
        out.diagonal.push_back(DiagonalStep{eps, deltas[pick], std::move(column[pick])});
    }
    const std::size_t n = epsilons.size();
    out.cauchy = n < 2 || out.trace.back() <= 10 * epsilons[n - 2];
    return out;
}

double monotone_delta_violation(const MAProblem& base, const std::vector<double>& deltas, double tol)
{
    require_schedule(deltas, "delta");
    if (deltas.front() >= 1) throw std::invalid_argument("monotone_delta_violation: delta must be < 1");
    std::vector<std::vector<double>> psi;
    double inf_psi = 0;
    for (double d : deltas) {
        auto rep = solve_ke_ode(regularized_problem(base, d, 0.0), tol);
        std::vector<double> p(rep.potential.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = (rep.potential[i] - std::log(1 - d)) / (1 - d);
            inf_psi = std::min(inf_psi, p[i]);
        }
        psi.push_back(std::move(p));
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < deltas.size(); ++j) {
        double dj = deltas[j], dk = deltas[j + 1];
        for (std::size_t i = 0; i < psi[j].size(); ++i) {
            double hi = psi[j][i] - inf_psi * dj / (1 - dj);
            double lo = psi[j + 1][i] - inf_psi * dk / (1 - dk);
            worst = std::max(worst, lo - hi);
        }
    }
    return worst;
}

namespace {

std::vector<double> neumann_second_difference(const std::vector<double>& phi, double h)
{
    const std::size_t n = phi.size();
    std::vector<double> d(n);
    const double ih2 = 1.0 / (h * h);
    d[0] = 2 * (phi[1] - phi[0]) * ih2;
    d[n - 1] = 2 * (phi[n - 2] - phi[n - 1]) * ih2;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (phi[i + 1] - 2 * phi[i] + phi[i - 1]) * ih2;
    return d;
}

}  // namespace

std::vector<double> energy_density(const std::vector<double>& phi, const RadialWeight& background)
{
    if (phi.size() != background.values().size()) throw std::invalid_argument("energy: length mismatch");
    auto d = neumann_second_difference(phi, background.grid()->spacing);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += background.second()[i];
    return d;
}

double energy(const std::vector<double>& phi, const RadialWeight& background)
{
    auto dens = energy_density(phi, background);
    std::vector<double> integrand(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) integrand[i] = 0.5 * phi[i] * (dens[i] + background.second()[i]);
    return trapezoid(integrand, background.grid()->spacing);
}

RadialMeasure ke_measure(const MAProblem& prob)
{
    const GridPtr& g = prob.background.grid();
    auto lf = log_divisor_frame_norm(prob.divisor, *g, prob.epsilon);
    RadialMeasure mu{g, std::vector<double>(lf.size())};
    for (int i = 0; i < g->node_count; ++i) {
        double prev = prob.previous ? (*prob.previous)[i] : 0.0;
        mu.log_density[i] =
            kLog2Pi + lf[i] + prob.background[i] - prob.twist[i] - prob.coupling * prev + g->nodes[i];
    }
    return mu;
}

double g_functional(const std::vector<double>& phi, const RadialWeight& background, const RadialMeasure& mu)
{
    if (phi.size() != mu.log_density.size()) throw std::invalid_argument("g_functional: length mismatch");
    std::vector<double> a(phi.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = phi[i] + mu.log_density[i];
    const double volume = background.slope_plus() - background.slope_minus();
    return energy(phi, background) - volume * log_trapezoid_exp(a, mu.grid->spacing);
}

std::vector<MAProblem> bounded_family(const MAProblem& base, const std::vector<double>& deltas)
{
    std::vector<MAProblem> out;
    for (double d : deltas) {
        if (!std::isfinite(d) || d < 0) throw std::invalid_argument("bounded_family: delta must be >= 0");
        MAProblem p = base;
        p.twist = base.twist + fs_weight(d * base.mass, base.twist.grid());
        p.background = base.background.scaled(1 + d);
        p.mass = (1 + d) * base.mass;
        p.divisor = base.divisor.scaled(1 + d);
        p.delta = d;
        out.push_back(std::move(p));
    }
    return out;
}

double uniform_bound_check(const std::vector<SolveReport>& reports)
{
    if (reports.empty()) throw std::invalid_argument("uniform_bound_check: no reports");
    double bound = 0;
    for (const auto& r : reports) bound = std::max(bound, sup_norm(r.potential));
    if (!std::isfinite(bound)) throw std::runtime_error("uniform_bound_check: bound is not finite");
    return bound;
}

}  // namespace kelab
