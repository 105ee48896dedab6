#pragma once

#include <span>
#include <vector>

namespace kelab {

// log(1 + e^x) without overflow
double softplus(double x);
double logistic(double x);
// log of the Fubini-Study frame norms |s_0|^2 = σ(t) and |s_inf|^2 = 1 - σ(t)
inline double log_sigma(double t) { return -softplus(-t); }
inline double log_one_minus_sigma(double t) { return -softplus(t); }

double trapezoid(std::span<const double> f, double h);
// log of the trapezoid sum of exp(a); optionally reports max(a)
double log_trapezoid_exp(std::span<const double> a, double h, double* peak = nullptr);
double logsumexp(std::span<const double> a);

// Thomas algorithm. lower[0] and upper[n-1] are ignored.
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

double sup_norm(std::span<const double> a);
double sup_distance(std::span<const double> a, std::span<const double> b);

}  // namespace kelab
