#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kelab/radial_geometry.hpp"

namespace kelab {

// u'' = 2π F_eps(t) exp(u - u_L - c u_prev + t), total curvature mass `mass`
struct MAProblem {
    RadialWeight background;
    RadialWeight twist;
    std::optional<RadialWeight> previous;
    double coupling = 0;
    DivisorData divisor;
    double epsilon = 0;
    double delta = 0;
    double mass = 0;
};

struct SolveReport {
    RadialWeight solution;
    std::vector<double> potential;  // solution - background
    std::vector<double> density;    // u'' from the solved equation
    int iterations = 0;
    double residual = 0;
    double tolerance = 0;  // the tolerance actually enforced
    double mass_defect = 0;
};

// Smooth-fibre KE problem: mass deg(u_L) - 2, background mass * log(1 + e^t).
MAProblem ke_problem(const RadialWeight& twist, const DivisorData& divisor = {}, double eps = 0);

SolveReport solve_ke_ode(const MAProblem& prob, double tol = 1e-10, int max_iter = 100,
                         const std::vector<double>* initial_correction = nullptr);

// sup norm of the discrete residual of `prob` at the weight u
double ma_residual(const MAProblem& prob, const RadialWeight& u);

// u + phi_E: the current whose Lelong numbers are the divisor coefficients
RadialWeight ke_current(const SolveReport& rep, const DivisorData& divisor);

// delta/eps regularisation of a base problem (background, twist and mass shifted by delta E_X,
// kinks of the twist mollified at scale eps, frame floor eps)
MAProblem regularized_problem(const MAProblem& base, double delta, double eps);

std::vector<double> halving_schedule(double start, int steps);

struct DiagonalStep {
    double epsilon = 0;
    double delta = 0;
    SolveReport report;
};

struct DiagonalResult {
    std::vector<DiagonalStep> diagonal;
    std::vector<double> trace;  // sup distance between consecutive diagonal potentials
    bool cauchy = false;
};

DiagonalResult regularized_diagonal(const MAProblem& base, const std::vector<double>& deltas,
                                    const std::vector<double>& epsilons, double tol = 1e-10);

// Largest violation of monotonicity in delta of the shifted potentials at eps = 0.
// Non-positive means the family is monotone.
double monotone_delta_violation(const MAProblem& base, const std::vector<double>& deltas, double tol = 1e-10);

double energy(const std::vector<double>& phi, const RadialWeight& background);
// ρ_bg + D²φ; the first variation of energy in direction v is its trapezoid pairing with v
std::vector<double> energy_density(const std::vector<double>& phi, const RadialWeight& background);

struct RadialMeasure {
    GridPtr grid;
    std::vector<double> log_density;  // against dt
};

RadialMeasure ke_measure(const MAProblem& prob);
double g_functional(const std::vector<double>& phi, const RadialWeight& background, const RadialMeasure& mu);

// Family with twist u_L + delta M u_FS, background and mass scaled by (1 + delta), divisor by (1 + delta).
std::vector<MAProblem> bounded_family(const MAProblem& base, const std::vector<double>& deltas);
double uniform_bound_check(const std::vector<SolveReport>& reports);

}  // namespace kelab
