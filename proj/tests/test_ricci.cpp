#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kelab/errors.hpp"
#include "kelab/numerics.hpp"
#include "kelab/ricci.hpp"

using namespace kelab;

TEST_CASE("Fubini-Study data: gaps follow the scalar recursion C' = c C - log pi")
{
    // every iterate is p M log(1+e^t) + C_m, so the gaps are exactly c^{m-1} log pi
    auto g = make_grid(30, 4096);
    for (int p : {2, 3}) {
        auto [state, trace] = run_ricci(fs_weight(4, g), {}, p, 400);
        const double c = (p - 1.0) / p;
        REQUIRE(trace.converged);
        for (std::size_t m = 0; m < 12; ++m)
            CHECK(trace.gaps[m] == doctest::Approx(std::pow(c, double(m)) * std::log(std::numbers::pi)).epsilon(1e-8));
        auto limit = state.weight.scaled(1.0 / p);
        auto [lo, hi] = g->index_range(-28, 28);
        for (int i = lo; i <= hi; i += 50)
            CHECK(limit[i] == doctest::Approx(2 * softplus((*g)[i]) - std::log(std::numbers::pi)).epsilon(1e-9));
    }
}

TEST_CASE("p = 1 is a single KE solve")
{
    auto g = make_grid(30, 2048);
    auto d = conic_divisor(0.5);
    auto s1 = ricci_step(initial_ricci_state(fs_weight(4, g), d, 1));
    auto ke = solve_ke_ode(ke_problem(fs_weight(4, g), d));
    CHECK(sup_distance(s1.weight.values(), ke.solution.values()) < 1e-9);
}

TEST_CASE("conic contraction stays under (p-1)/p")
{
    auto g = make_grid(30, 2048);
    for (int p : {2, 5}) {
        auto [state, trace] = run_ricci(fs_weight(4, g), conic_divisor(0.5), p, 600);
        const double c = (p - 1.0) / p;
        CHECK(trace.converged);
        CHECK(trace.envelope_ok);
        CHECK(trace.contraction_violations.empty());
        for (double r : trace.ratios) CHECK(r <= c + 1e-3);
    }
}

TEST_CASE("normalization integral is p M with the constant -log p")
{
    auto g = make_grid(30, 2048);
    auto s = initial_ricci_state(fs_weight(4, g), conic_divisor(0.5), 3);
    CHECK_THROWS_AS(normalize_constant(s), std::invalid_argument);
    for (int m = 0; m < 4; ++m) s = ricci_step(s);
    auto rec = normalize_constant(s);
    CHECK(rec.integral == doctest::Approx(6.0).epsilon(1e-8));
    CHECK(rec.integral_without_constant == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(rec.additive_constant == doctest::Approx(-std::log(3.0)));
}

TEST_CASE("limit matches the direct KE solve and mismatched inputs are refused")
{
    auto g = make_grid(30, 2048);
    auto d = conic_divisor(0.5);
    auto prob = ke_problem(fs_weight(4, g), d);
    auto ke = solve_ke_ode(prob);
    auto [state, trace] = run_ricci(fs_weight(4, g), d, 2, 400);
    CHECK(fixed_point_residual(state) < 1e-6);
    auto cmp = compare_to_ke(state, ke, prob);
    CHECK(cmp.sup_distance < 1e-5);
    CHECK(cmp.lelong_zero_difference == 0.5);
    CHECK(cmp.lelong_infinity_difference == 0.0);

    auto other = ke_problem(fs_weight(4, g));
    CHECK_THROWS_AS(compare_to_ke(state, solve_ke_ode(other), other), std::invalid_argument);
    auto g2 = make_grid(30, 1024);
    auto other_grid = ke_problem(fs_weight(4, g2), d);
    CHECK_THROWS_AS(compare_to_ke(state, solve_ke_ode(other_grid), other_grid), std::invalid_argument);
}

TEST_CASE("bad Ricci input")
{
    auto g = make_grid(30, 512);
    CHECK_THROWS_AS(initial_ricci_state(fs_weight(4, g), {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(initial_ricci_state(fs_weight(2, g), {}, 2), ConfigurationError);
    CHECK_THROWS_AS(run_ricci(fs_weight(4, g), {}, 2, 1), std::invalid_argument);
}
