#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "kelab/ma_solver.hpp"
#include "kelab/radial_geometry.hpp"

namespace kelab {

struct NormalizationRecord {
    double integral = 0;                   // ∫ e^{w_m - c w_{m-1} + phi_E - phi_L} dλ, equals p M
    double additive_constant = 0;          // constant added to phi_L
    double integral_without_constant = 0;  // the same integral before the constant, equals M
};

struct RicciState {
    int p = 1;
    int m = 0;
    RadialWeight weight;                   // w_m on the class pA
    std::optional<RadialWeight> previous;  // w_{m-1}
    RadialWeight twist;
    DivisorData divisor;
    double epsilon = 0;
    double mass = 0;  // deg A

    std::vector<double> potential() const;  // w_m - p phi_A
};

RicciState initial_ricci_state(const RadialWeight& twist, const DivisorData& divisor, int p, double eps = 0);

// The problem whose solution is w_{m+1}.
MAProblem ricci_problem(const RicciState& state);
RicciState ricci_step(const RicciState& state, double tol = 1e-10);
NormalizationRecord normalize_constant(const RicciState& state);

struct RicciTrace {
    std::vector<double> gaps;    // g_1, g_2, ...
    std::vector<double> ratios;  // r_m = g_m / g_{m-1}, m >= 2 (ratios[0] is r_2)
    std::vector<double> normalization;
    std::vector<double> residual;
    std::vector<int> contraction_violations;  // m with r_m > (p-1)/p + slack
    bool envelope_ok = true;
    bool converged = false;
};

std::pair<RicciState, RicciTrace> run_ricci(const RadialWeight& twist, const DivisorData& divisor, int p,
                                            int m_max, double stop_tol = 1e-10, double tol = 1e-10,
                                            double slack = 1e-3, double eps = 0);

double fixed_point_residual(const RicciState& state);

struct KEComparison {
    double sup_distance = 0;
    double lelong_zero_difference = 0;
    double lelong_infinity_difference = 0;
};

KEComparison compare_to_ke(const RicciState& state, const SolveReport& ke, const MAProblem& ke_prob);

}  // namespace kelab
