#pragma once

#include <optional>
#include <vector>

#include "kelab/errors.hpp"
#include "kelab/kernels.hpp"
#include "kelab/radial_geometry.hpp"

namespace kelab {

// The trapezoid integrand is not negligible at the ends of the grid.
class DecayGuardError : public ConfigurationError {
public:
    using ConfigurationError::ConfigurationError;
};

struct SectionBasis {
    int level = 1;
    int p = 1;
    double twist_degree = 0;  // k
    DivisorData divisor;      // coefficients already perturbed
    int degree = 0;           // D_l = l p (k - 2 + a_0 + a_inf)
    int j_min = 0;
    int j_max = 0;
    double frac_zero = 0;      // ceil(l p a_0) - l p a_0
    double frac_infinity = 0;  // ceil(l p a_inf) - l p a_inf

    int dimension() const { return j_max - j_min + 1; }
    bool integral_vanishing() const { return frac_zero == 0 && frac_infinity == 0; }
};

SectionBasis section_range(int level, int p, double twist_degree, const DivisorData& divisor, double delta = 0);

struct WeightChain {
    int m = 0;
    int p = 1;
    double twist_degree = 0;
    DivisorData divisor;
    double epsilon = 0;
    RadialWeight tau;     // (p-1)(w_{m-1}/p + phi_E) + phi_L
    RadialWeight target;  // w_m + p phi_E
};

WeightChain make_weight_chain(int p, const RadialWeight& twist, const DivisorData& divisor,
                              const RadialWeight& w_prev, const RadialWeight& w_m, int m, double eps = 0);

struct BergmanLevel {
    SectionBasis basis;
    std::vector<double> log_gram;
    std::vector<double> kappa;  // log K_l in the z frame
    GridPtr grid;
};

GramDiagonal gram_diagonal(const SectionBasis& basis, const WeightChain& chain, const BergmanLevel* prev,
                           Backend backend = Backend::openmp);
BergmanLevel bergman_step(const BergmanLevel* prev, const WeightChain& chain, Backend backend = Backend::openmp);
std::vector<double> renormalized_profile(const BergmanLevel& level);

// 2π ∫ K_l^{1/l} e^{-τ} e^t dt; needs integral vanishing orders
double chain_integral(const BergmanLevel& level, const WeightChain& chain);

std::vector<double> c_ell_reference(const BergmanLevel& level, const WeightChain& chain);
double c_ell_diagnostic(const BergmanLevel& level, const std::vector<double>& reference);

struct BergmanTraceRow {
    int level = 0;
    int dimension = 0;
    double log_gram_min = 0;
    double log_gram_max = 0;
    double distance = 0;      // sup over the window of |renormalized - target|
    double lower_margin = 0;  // min over the window of renormalized - target + (1 + log l)/l
    double chain_lhs = 0;
    double chain_bound = 0;   // (Π N_i)^{1/l}
    double chain_slack = 0;   // chain_lhs / chain_bound - 1
    double asymptotic = 0;    // chain_lhs / (l!)^{1/l}, tends to p deg A
    double c_ell = 0;
    double trend = 0;         // C_l - C_{l-1} - log l
};

struct BergmanRun {
    std::vector<BergmanTraceRow> rows;
    BergmanLevel last;
};

BergmanRun run_bergman(const WeightChain& chain, int max_level, Backend backend = Backend::openmp,
                       double window = 10.0);

struct ConvergenceVerdict {
    bool monotone = false;  // non-increasing distances for l >= monotone_from
    bool lower_bound = false;
    double fit_log = 0;    // d_l ≈ fit_log log(l)/l + fit_inv / l
    double fit_inv = 0;
    double final_distance = 0;
};

ConvergenceVerdict convergence_check(const std::vector<BergmanTraceRow>& rows, int monotone_from = 20);

struct ChainVerdict {
    bool holds = false;
    double worst_slack = 0;
    bool dimensions_exact = false;
};

ChainVerdict integral_chain_check(const std::vector<BergmanTraceRow>& rows, int p, double mass,
                                  double rel_tol = 1e-8);

}  // namespace kelab
