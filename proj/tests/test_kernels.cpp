#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <vector>

#include "kelab/kernels.hpp"
#include "kelab/numerics.hpp"
#include "kelab/radial_geometry.hpp"

using namespace kelab;

namespace {

struct Setup {
    GridPtr grid = make_grid(60, 6001);
    std::vector<double> base;
    explicit Setup(double k)
    {
        for (double t : grid->nodes) base.push_back(t - k * softplus(t));
    }
};

}  // namespace

TEST_CASE("Gram kernel reproduces Beta integrals")
{
    // 2π ∫ e^{(j+1)t} (1+e^t)^{-k} dt = 2π B(j+1, k-j-1)
    for (double k : {4.0, 6.0}) {
        Setup s(k);
        int jmax = static_cast<int>(k) - 2;
        auto gd = gram_diagonal_kernel(s.grid->nodes, s.base, s.grid->spacing, 0, jmax, Backend::serial);
        for (int j = 0; j <= jmax; ++j) {
            double exact = 2 * std::numbers::pi * std::beta(j + 1.0, k - j - 1.0);
            CHECK(std::exp(gd.log_gram[j]) == doctest::Approx(exact).epsilon(1e-10));
        }
    }
}

TEST_CASE("serial and OpenMP kernels agree bit for bit")
{
    Setup s(40);
    auto a = gram_diagonal_kernel(s.grid->nodes, s.base, s.grid->spacing, 0, 38, Backend::serial);
    auto b = gram_diagonal_kernel(s.grid->nodes, s.base, s.grid->spacing, 0, 38, Backend::openmp);
    CHECK(a.log_gram == b.log_gram);
    CHECK(a.log_peak == b.log_peak);
    CHECK(a.log_edge == b.log_edge);
    auto ka = kernel_profile(s.grid->nodes, a.log_gram, 0, Backend::serial);
    auto kb = kernel_profile(s.grid->nodes, a.log_gram, 0, Backend::openmp);
    CHECK(ka == kb);
}

TEST_CASE("kernel profile equals the direct sum where it is safe to form")
{
    std::vector<double> t{-2.0, -0.5, 0.0, 1.0, 3.0};
    std::vector<double> lg{0.3, -0.2, 1.1};
    auto k = kernel_profile(t, lg, 2, Backend::serial);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double direct = 0;
        for (int q = 0; q < 3; ++q) direct += std::exp((2 + q) * t[i] - lg[q]);
        CHECK(k[i] == doctest::Approx(std::log(direct)).epsilon(1e-14));
    }
}

TEST_CASE("bad kernel input")
{
    std::vector<double> t{0.0, 1.0}, b{0.0};
    CHECK_THROWS_AS(gram_diagonal_kernel(t, b, 1.0, 0, 1, Backend::serial), std::invalid_argument);
    std::vector<double> b2{0.0, 0.0};
    CHECK_THROWS_AS(gram_diagonal_kernel(t, b2, 1.0, 2, 1, Backend::serial), std::invalid_argument);
}
