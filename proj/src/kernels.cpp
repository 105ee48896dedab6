#include "kelab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kelab/numerics.hpp"

namespace kelab {

namespace {

void gram_entry(std::span<const double> t, std::span<const double> base, double h, int j, double& lg,
                double& peak, double& edge)
{
    const std::size_t n = t.size();
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, j * t[i] + base[i]);
    double s = 0.5 * (std::exp(j * t[0] + base[0] - m) + std::exp(j * t[n - 1] + base[n - 1] - m));
    for (std::size_t i = 1; i + 1 < n; ++i) s += std::exp(j * t[i] + base[i] - m);
    lg = std::log(2 * std::numbers::pi) + m + std::log(s * h);
    peak = m;
    edge = std::max(j * t[0] + base[0], j * t[n - 1] + base[n - 1]);
}

double kernel_at(double t, std::span<const double> log_gram, int j_min)
{
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < log_gram.size(); ++q) m = std::max(m, (j_min + static_cast<int>(q)) * t - log_gram[q]);
    double s = 0;
    for (std::size_t q = 0; q < log_gram.size(); ++q) s += std::exp((j_min + static_cast<int>(q)) * t - log_gram[q] - m);
    return m + std::log(s);
}

}  // namespace

GramDiagonal gram_diagonal_kernel(std::span<const double> t, std::span<const double> base, double h,
                                  int j_min, int j_max, Backend backend)
{
    if (t.size() != base.size() || t.size() < 2) throw std::invalid_argument("gram_diagonal_kernel: bad sizes");
    if (j_max < j_min) throw std::invalid_argument("gram_diagonal_kernel: empty exponent range");
    const int count = j_max - j_min + 1;
    GramDiagonal out;
    out.log_gram.resize(count);
    out.log_peak.resize(count);
    out.log_edge.resize(count);
    if (backend == Backend::serial) {
        for (int q = 0; q < count; ++q)
            gram_entry(t, base, h, j_min + q, out.log_gram[q], out.log_peak[q], out.log_edge[q]);
    } else {
#pragma omp parallel for schedule(static)
        for (int q = 0; q < count; ++q)
            gram_entry(t, base, h, j_min + q, out.log_gram[q], out.log_peak[q], out.log_edge[q]);
    }
    return out;
}

std::vector<double> kernel_profile(std::span<const double> t, std::span<const double> log_gram, int j_min,
                                   Backend backend)
{
    if (log_gram.empty()) throw std::invalid_argument("kernel_profile: empty Gram diagonal");
    const int n = static_cast<int>(t.size());
    std::vector<double> kappa(t.size());
    if (backend == Backend::serial) {
        for (int i = 0; i < n; ++i) kappa[i] = kernel_at(t[i], log_gram, j_min);
    } else {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) kappa[i] = kernel_at(t[i], log_gram, j_min);
    }
    return kappa;
}

}  // namespace kelab
