#include "kelab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kelab {

double softplus(double x)
{
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double logistic(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double trapezoid(std::span<const double> f, double h)
{
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

double log_trapezoid_exp(std::span<const double> a, double h, double* peak)
{
    if (a.size() < 2) throw std::invalid_argument("log_trapezoid_exp: need at least two nodes");
    double m = *std::max_element(a.begin(), a.end());
    if (peak) *peak = m;
    if (!std::isfinite(m)) return m;
    double s = 0.5 * (std::exp(a.front() - m) + std::exp(a.back() - m));
    for (std::size_t i = 1; i + 1 < a.size(); ++i) s += std::exp(a[i] - m);
    return m + std::log(s * h);
}

double logsumexp(std::span<const double> a)
{
    if (a.empty()) return -std::numeric_limits<double>::infinity();
    double m = *std::max_element(a.begin(), a.end());
    if (!std::isfinite(m)) return m;
    double s = 0;
    for (double x : a) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs)
{
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n || n == 0)
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    std::vector<double> c(n), x(n);
    double b = diag[0];
    if (b == 0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    c[0] = upper[0] / b;
    x[0] = rhs[0] / b;
    for (std::size_t i = 1; i < n; ++i) {
        b = diag[i] - lower[i] * c[i - 1];
        if (b == 0) throw std::runtime_error("solve_tridiagonal: zero pivot");
        c[i] = upper[i] / b;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / b;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return x;
}

double sup_norm(std::span<const double> a)
{
    double m = 0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("sup_distance: size mismatch");
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace kelab
