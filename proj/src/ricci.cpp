#include "kelab/ricci.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kelab/errors.hpp"
#include "kelab/numerics.hpp"

namespace kelab {

namespace {

struct StepResult {
    RicciState state;
    double residual;
};

StepResult step_with_report(const RicciState& s, double tol)
{
    MAProblem prob = ricci_problem(s);
    std::vector<double> init;
    const std::vector<double>* warm = nullptr;
    if (s.m > 0) {
        // warm start from the current iterate
        const auto& g = *s.weight.grid();
        init.resize(g.nodes.size());
        for (std::size_t i = 0; i < init.size(); ++i) init[i] = s.weight.values()[i] - prob.mass * softplus(g.nodes[i]);
        warm = &init;
    }
    SolveReport rep = solve_ke_ode(prob, tol, 100, warm);
    RicciState next = s;
    next.previous = s.weight;
    next.weight = rep.solution;
    next.m = s.m + 1;
    return {std::move(next), rep.residual};
}

}  // namespace

std::vector<double> RicciState::potential() const
{
    auto ref = fs_weight(p * mass, weight.grid());
    std::vector<double> out(weight.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = weight.values()[i] - ref.values()[i];
    return out;
}

RicciState initial_ricci_state(const RadialWeight& twist, const DivisorData& divisor, int p, double eps)
{
    if (p < 1) throw std::invalid_argument("ricci: p must be >= 1");
    const double mass = twist.bundle_degree() - 2;
    if (!(mass > 0)) throw ConfigurationError("ricci: twist degree must exceed 2");
    return RicciState{p, 0, fs_weight(p * mass, twist.grid()), std::nullopt, twist, divisor, eps, mass};
}

MAProblem ricci_problem(const RicciState& s)
{
    const double pm = s.p * s.mass;
    MAProblem prob{fs_weight(pm, s.weight.grid()),
                   s.twist - std::log(static_cast<double>(s.p)),
                   std::nullopt,
                   0.0,
                   s.divisor,
                   s.epsilon,
                   0.0,
                   pm};
    if (s.p > 1) {
        prob.previous = s.weight;
        prob.coupling = static_cast<double>(s.p - 1) / s.p;
    }
    return prob;
}

RicciState ricci_step(const RicciState& state, double tol) { return step_with_report(state, tol).state; }

NormalizationRecord normalize_constant(const RicciState& s)
{
    if (s.m < 1 || !s.previous) throw std::invalid_argument("normalize_constant: defined from m >= 1");
    const auto& g = *s.weight.grid();
    const double c = static_cast<double>(s.p - 1) / s.p;
    const double logp = std::log(static_cast<double>(s.p));
    auto lf = log_divisor_frame_norm(s.divisor, g, s.epsilon);
    std::vector<double> a(g.nodes.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = std::log(2 * std::numbers::pi) + lf[i] + s.weight.values()[i] - c * s.previous->values()[i] -
               s.twist.values()[i] + logp + g.nodes[i];
    NormalizationRecord r;
    r.integral = std::exp(log_trapezoid_exp(a, g.spacing));
    r.additive_constant = -logp;
    r.integral_without_constant = r.integral / s.p;
    return r;
}

std::pair<RicciState, RicciTrace> run_ricci(const RadialWeight& twist, const DivisorData& divisor, int p,
                                            int m_max, double stop_tol, double tol, double slack, double eps)
{
    if (m_max < 2) throw std::invalid_argument("run_ricci: m_max must be >= 2");
    if (!(stop_tol > 0)) throw std::invalid_argument("run_ricci: stop_tol must be positive");
    RicciState state = initial_ricci_state(twist, divisor, p, eps);
    RicciTrace trace;
    const double c = static_cast<double>(p - 1) / p;
    for (int m = 1; m <= m_max; ++m) {
        auto [next, res] = step_with_report(state, tol);
        double gap = sup_distance(next.weight.values(), state.weight.values());
        state = std::move(next);
        trace.gaps.push_back(gap);
        trace.residual.push_back(res);
        trace.normalization.push_back(normalize_constant(state).integral);
        if (m >= 2) {
            double r = gap / trace.gaps[m - 2];
            trace.ratios.push_back(r);
            if (r > c + slack) trace.contraction_violations.push_back(m);
            if (p > 1 && gap > std::pow(c, m - 1) * trace.gaps.front() * (1 + 1e-2)) trace.envelope_ok = false;
        }
        if (gap <= stop_tol) {
            trace.converged = true;
            break;
        }
    }
    return {std::move(state), std::move(trace)};
}

double fixed_point_residual(const RicciState& state) { return ma_residual(ricci_problem(state), state.weight); }

KEComparison compare_to_ke(const RicciState& state, const SolveReport& ke, const MAProblem& ke_prob)
{
    const auto& g1 = *state.weight.grid();
    const auto& g2 = *ke.solution.grid();
    if (g1.node_count != g2.node_count || g1.half_width != g2.half_width)
        throw std::invalid_argument("compare_to_ke: different grids");
    if (!(state.divisor == ke_prob.divisor) || state.epsilon != ke_prob.epsilon)
        throw std::invalid_argument("compare_to_ke: different divisor data");
    if (sup_distance(state.twist.values(), ke_prob.twist.values()) > 1e-12 || ke_prob.coupling != 0)
        throw std::invalid_argument("compare_to_ke: different twists");
    RadialWeight limit = state.weight.scaled(1.0 / state.p);
    KEComparison out;
    out.sup_distance = sup_distance(limit.values(), ke.solution.values());
    auto [z_ke, i_ke] = lelong_numbers(ke_current(ke, ke_prob.divisor));
    auto [z_w, i_w] = lelong_numbers(limit);
    out.lelong_zero_difference = z_ke - z_w;
    out.lelong_infinity_difference = i_ke - i_w;
    return out;
}

}  // namespace kelab
