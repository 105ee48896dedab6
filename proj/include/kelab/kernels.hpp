#pragma once

#include <span>
#include <vector>

namespace kelab {

enum class Backend { serial, openmp };

struct GramDiagonal {
    std::vector<double> log_gram;  // log G_j, j = j_min..j_max
    std::vector<double> log_peak;  // max over nodes of the log integrand
    std::vector<double> log_edge;  // max of the log integrand at the two end nodes
};

// G_j = 2π ∫ exp(j t + base(t)) dt by the trapezoid rule
GramDiagonal gram_diagonal_kernel(std::span<const double> t, std::span<const double> base, double h,
                                  int j_min, int j_max, Backend backend);

// κ(t) = log Σ_j exp(j t - log G_j)
std::vector<double> kernel_profile(std::span<const double> t, std::span<const double> log_gram, int j_min,
                                   Backend backend);

}  // namespace kelab
