#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <vector>

#include "kelab/bergman.hpp"
#include "kelab/ma_solver.hpp"
#include "kelab/numerics.hpp"
#include "kelab/ricci.hpp"

using namespace kelab;

namespace {

const double kPi = std::numbers::pi;

struct Smooth {
    GridPtr grid = make_grid(80, 8801);
    RadialWeight twist = fs_weight(4, grid);
    SolveReport ke = solve_ke_ode(ke_problem(twist));
    WeightChain chain = make_weight_chain(1, twist, {}, ke.solution, ke.solution, 1);
};

// composite Simpson on [0, 1]; exact for the cubic integrands used below
double simpson01(double (*f)(double, int), int j)
{
    const int n = 64;
    double s = f(0, j) + f(1, j);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(double(i) / n, j);
    return s / (3.0 * n);
}

}  // namespace

TEST_CASE("level-1 Gram diagonal against Beta and against quadrature in x = e^t/(1+e^t)")
{
    Smooth s;
    auto basis = section_range(1, 1, 4, {});
    REQUIRE(basis.dimension() == 3);
    auto gd = gram_diagonal(basis, s.chain, nullptr, Backend::serial);
    auto integrand = [](double x, int j) { return std::pow(x, j) * std::pow(1 - x, 2 - j); };
    for (int j = 0; j < 3; ++j) {
        double beta = 2 * kPi * std::beta(j + 1.0, 3.0 - j);
        double quad = 2 * kPi * simpson01(integrand, j);
        CHECK(std::exp(gd.log_gram[j]) == doctest::Approx(beta).epsilon(1e-8));
        CHECK(std::exp(gd.log_gram[j]) == doctest::Approx(quad).epsilon(1e-8));
    }
    CHECK(std::exp(gd.log_gram[0]) == doctest::Approx(2 * kPi / 3).epsilon(1e-8));
    CHECK(std::exp(gd.log_gram[1]) == doctest::Approx(kPi / 3).epsilon(1e-8));
}

TEST_CASE("level-1 kernel is log(3/2π) + 2 log(1+e^t)")
{
    Smooth s;
    auto lvl = bergman_step(nullptr, s.chain, Backend::serial);
    double err = 0;
    for (int i = 0; i < s.grid->node_count; ++i)
        err = std::max(err, std::abs(lvl.kappa[i] - (std::log(3 / (2 * kPi)) + 2 * softplus((*s.grid)[i]))));
    CHECK(err < 1e-8);
}

TEST_CASE("symmetric data gives a palindromic Gram diagonal")
{
    Smooth s;
    auto l1 = bergman_step(nullptr, s.chain);
    auto l2 = bergman_step(&l1, s.chain);
    auto l3 = bergman_step(&l2, s.chain);
    const auto& g = l3.log_gram;
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(g[j] == doctest::Approx(g[g.size() - 1 - j]).epsilon(1e-9));
}

TEST_CASE("serial and OpenMP Bergman steps agree")
{
    Smooth s;
    auto a = bergman_step(nullptr, s.chain, Backend::serial);
    auto b = bergman_step(nullptr, s.chain, Backend::openmp);
    auto a2 = bergman_step(&a, s.chain, Backend::serial);
    auto b2 = bergman_step(&b, s.chain, Backend::openmp);
    CHECK(a2.log_gram == b2.log_gram);
    CHECK(a2.kappa == b2.kappa);
}

TEST_CASE("section ranges and dimensions")
{
    for (int l : {1, 2, 7, 40})
        for (int p : {1, 2, 3}) CHECK(section_range(l, p, 4, {}).dimension() == l * p * 2 + 1);
    auto conic = section_range(3, 2, 4, conic_divisor(0.5));
    CHECK(conic.j_min == 3);
    CHECK(conic.j_max == 15);
    CHECK(conic.dimension() == 13);
    CHECK(conic.integral_vanishing());
    auto thirds = make_divisor({{SupportPoint::zero, 1.0 / 3, 0}, {SupportPoint::infinity, 2.0 / 3, 0}});
    auto frac = section_range(1, 1, 4, thirds);
    CHECK_FALSE(frac.integral_vanishing());
    CHECK(frac.frac_zero == doctest::Approx(2.0 / 3));
    CHECK_THROWS_AS(section_range(1, 1, 4, conic_divisor(1.0 / 3)), ConfigurationError);
    CHECK_THROWS_AS(section_range(1, 1, 4.5, {}), ConfigurationError);
    CHECK_THROWS_AS(section_range(1, 1, 2, {}), ConfigurationError);
}

TEST_CASE("chain integral refuses fractional vanishing orders")
{
    auto g = make_grid(80, 8801);
    auto tw = fs_weight(4, g);
    auto d = make_divisor({{SupportPoint::zero, 1.0 / 3, 0}, {SupportPoint::infinity, 2.0 / 3, 0}});
    auto ke = solve_ke_ode(ke_problem(tw, d));
    auto chain = make_weight_chain(1, tw, d, ke.solution, ke.solution, 1);
    auto lvl = bergman_step(nullptr, chain);
    CHECK_THROWS_AS(chain_integral(lvl, chain), ConfigurationError);
}

TEST_CASE("decay guard trips on a grid that cuts the integrand off")
{
    auto g = make_grid(8, 801);
    auto tw = fs_weight(4, g);
    auto ke = solve_ke_ode(ke_problem(tw));
    auto chain = make_weight_chain(1, tw, {}, ke.solution, ke.solution, 1);
    CHECK_THROWS_AS(bergman_step(nullptr, chain), DecayGuardError);
}

TEST_CASE("C_l diagnostic rejects a reference with the wrong slopes")
{
    Smooth s;
    auto lvl = bergman_step(nullptr, s.chain);
    auto good = c_ell_reference(lvl, s.chain);
    CHECK(std::isfinite(c_ell_diagnostic(lvl, good)));
    auto bad = good;
    for (int i = 0; i < s.grid->node_count; ++i) bad[i] += (*s.grid)[i];
    CHECK_THROWS_AS(c_ell_diagnostic(lvl, bad), ConfigurationError);
}

TEST_CASE("smooth run: distances equal (1/l) sum log(1 + 1/(2i)), chain and dimensions hold")
{
    Smooth s;
    auto run = run_bergman(s.chain, 30);
    REQUIRE(run.rows.size() == 30);
    double sum = 0;
    for (const auto& r : run.rows) {
        sum += std::log(1 + 0.5 / r.level);
        CHECK(r.distance == doctest::Approx(sum / r.level).epsilon(1e-6));
        CHECK(r.dimension == 2 * r.level + 1);
    }
    auto chain = integral_chain_check(run.rows, 1, 2);
    CHECK(chain.holds);
    CHECK(chain.dimensions_exact);
    auto v = convergence_check(run.rows, 5);
    CHECK(v.monotone);
    CHECK(v.lower_bound);
}

TEST_CASE("conic p = 2 run over a few levels")
{
    auto g = make_grid(80, 8801);
    auto tw = fs_weight(4, g);
    auto d = conic_divisor(0.5);
    auto [state, trace] = run_ricci(tw, d, 2, 400);
    REQUIRE(trace.converged);
    auto chain = make_weight_chain(2, tw, d, *state.previous, state.weight, state.m);
    auto run = run_bergman(chain, 12);
    auto v = integral_chain_check(run.rows, 2, 2);
    CHECK(v.holds);
    CHECK(v.dimensions_exact);
    CHECK(run.rows.back().distance < run.rows.front().distance);
}
