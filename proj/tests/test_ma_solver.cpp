#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <random>
#include <vector>

#include "kelab/errors.hpp"
#include "kelab/ma_solver.hpp"
#include "kelab/numerics.hpp"

using namespace kelab;

namespace {

const double kPi = std::numbers::pi;

// Second-order finite differences for u'' = 2π σ^a e^{u - k softplus + t}, u'(-T) = 0, u'(T) = k - 2.
std::vector<double> plain_fd_solve(const RadialGrid& g, double k, double a)
{
    const int n = g.node_count;
    const double h = g.spacing, M = k - 2;
    std::vector<double> logf(n), u(n);
    for (int i = 0; i < n; ++i) {
        double t = g[i];
        logf[i] = std::log(2 * kPi) + a * log_sigma(t) - k * softplus(t) + t;
        u[i] = M * softplus(t);
    }
    std::vector<double> shifted(n);
    for (int i = 0; i < n; ++i) shifted[i] = logf[i] + u[i];
    double c = std::log(M) - log_trapezoid_exp(shifted, h);
    for (auto& x : u) x += c;

    for (int it = 0; it < 60; ++it) {
        std::vector<double> r(n), lo(n), di(n), up(n), neg(n);
        double res = 0;
        for (int i = 0; i < n; ++i) {
            double um = i == 0 ? u[1] : u[i - 1];
            double up_ = i == n - 1 ? u[n - 2] + 2 * h * M : u[i + 1];
            double e = std::exp(logf[i] + u[i]);
            r[i] = (up_ - 2 * u[i] + um) / (h * h) - e;
            di[i] = -2 / (h * h) - e;
            lo[i] = 1 / (h * h);
            up[i] = 1 / (h * h);
            neg[i] = -r[i];
            res = std::max(res, std::abs(r[i]));
        }
        up[0] = 2 / (h * h);
        lo[n - 1] = 2 / (h * h);
        if (res < 1e-11) break;
        auto du = solve_tridiagonal(lo, di, up, neg);
        for (int i = 0; i < n; ++i) u[i] += du[i];
    }
    return u;
}

}  // namespace

TEST_CASE("closed-form Fubini-Study solutions for several degrees")
{
    auto g = make_grid(30, 4096);
    for (double k : {3.0, 4.0, 5.0, 6.0}) {
        auto rep = solve_ke_ode(ke_problem(fs_weight(k, g)));
        const double c = std::log((k - 2) / (2 * kPi));
        auto [lo, hi] = g->index_range(-28, 28);
        double err = 0;
        for (int i = lo; i <= hi; ++i) err = std::max(err, std::abs(rep.solution[i] - ((k - 2) * softplus((*g)[i]) + c)));
        CHECK(err < 1e-10);
        CHECK(rep.mass_defect < 1e-8);
        CHECK(positively_curved(rep.solution));
    }
}

TEST_CASE("conic solve agrees with an independent second-order discretization")
{
    auto g = make_grid(30, 4096);
    auto rep = solve_ke_ode(ke_problem(fs_weight(4, g), conic_divisor(0.5)));
    auto fd = plain_fd_solve(*g, 4, 0.5);
    auto [lo, hi] = g->index_range(-25, 25);
    double err = 0;
    for (int i = lo; i <= hi; ++i) err = std::max(err, std::abs(rep.solution[i] - fd[i]));
    CHECK(err < 1e-3);

    auto [l0, linf] = lelong_numbers(ke_current(rep, conic_divisor(0.5)));
    CHECK(l0 == doctest::Approx(0.5));
    CHECK(linf == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("the scheme is fourth order under grid refinement")
{
    std::vector<std::vector<double>> sols;
    std::vector<GridPtr> grids;
    for (int n : {513, 1025, 2049}) {
        grids.push_back(make_grid(30, n));
        sols.push_back(solve_ke_ode(ke_problem(fs_weight(4, grids.back()), conic_divisor(0.5))).solution.values());
    }
    double d1 = 0, d2 = 0;
    for (int i = 0; i < 513; ++i) {
        if (std::abs((*grids[0])[i]) > 25) continue;
        d1 = std::max(d1, std::abs(sols[0][i] - sols[1][2 * i]));
        d2 = std::max(d2, std::abs(sols[1][2 * i] - sols[2][4 * i]));
    }
    CHECK(d1 / d2 > 10);
}

TEST_CASE("residual vanishes at the solution and not elsewhere")
{
    auto g = make_grid(30, 2048);
    auto prob = ke_problem(fs_weight(4, g), conic_divisor(0.3));
    auto rep = solve_ke_ode(prob);
    CHECK(ma_residual(prob, rep.solution) <= rep.tolerance * 10);
    CHECK(ma_residual(prob, rep.solution + 0.1) > 1e-3);
}

TEST_CASE("errors: non-integrable class and Newton exhaustion")
{
    auto g = make_grid(30, 1024);
    CHECK_THROWS_AS(ke_problem(fs_weight(2, g)), ConfigurationError);
    auto prob = ke_problem(fs_weight(4, g), conic_divisor(0.5));
    try {
        solve_ke_ode(prob, 1e-12, 1);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 1e-12);
    }
}

TEST_CASE("regularization reduces to the base problem at zero parameters")
{
    auto g = make_grid(30, 2048);
    auto base = ke_problem(fs_weight(4, g), conic_divisor(0.5, 1.0));
    auto a = solve_ke_ode(base);
    auto b = solve_ke_ode(regularized_problem(base, 0.0, 0.0));
    CHECK(sup_distance(a.solution.values(), b.solution.values()) < 1e-12);
    CHECK(monotone_delta_violation(base, {0.2, 0.1, 0.05, 0.025}) <= 0);
}

TEST_CASE("diagonal sequence approaches the unregularized solution")
{
    auto g = make_grid(30, 2048);
    auto base = ke_problem(fs_weight(4, g), conic_divisor(0.5, 1.0));
    auto sched = halving_schedule(0.1, 10);
    CHECK(sched.size() == 10);
    CHECK(sched.back() == doctest::Approx(0.1 / 512));
    auto diag = regularized_diagonal(base, sched, sched);
    auto ref = solve_ke_ode(base);
    CHECK(diag.cauchy);
    std::vector<double> dist;
    for (const auto& s : diag.diagonal) dist.push_back(sup_distance(s.report.potential, ref.potential));
    CHECK(dist.back() < 1e-3);
    CHECK(dist.back() < dist.front());
}

TEST_CASE("energy first variation matches finite differences")
{
    auto g = make_grid(30, 4096);
    auto bg = fs_weight(2, g);
    std::vector<double> phi(g->node_count), v(g->node_count), moved(g->node_count), pair(g->node_count);
    const double s = 1e-5;
    for (int i = 0; i < g->node_count; ++i) {
        double t = (*g)[i];
        phi[i] = 0.4 * std::exp(-0.3 * (t - 1) * (t - 1));
        v[i] = 0.07 * std::exp(-0.5 * (t + 2) * (t + 2));
        moved[i] = phi[i] + s * v[i];
    }
    auto dens = energy_density(phi, bg);
    for (int i = 0; i < g->node_count; ++i) pair[i] = v[i] * dens[i];
    double fd = (energy(moved, bg) - energy(phi, bg)) / s;
    CHECK(std::abs(fd - trapezoid(pair, g->spacing)) < 1e-6);
}

TEST_CASE("the KE potential maximizes G against seeded bumps")
{
    auto g = make_grid(30, 2048);
    auto prob = ke_problem(fs_weight(4, g), conic_divisor(0.5));
    auto rep = solve_ke_ode(prob);
    auto mu = ke_measure(prob);
    double g0 = g_functional(rep.potential, prob.background, mu);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0, 1);
    for (int n = 0; n < 30; ++n) {
        double amp = 0.1 * (1 - U(rng)) * (U(rng) < 0.5 ? -1 : 1);
        double c = -10 + 20 * U(rng), w = 0.5 + 2.5 * U(rng);
        auto phi = rep.potential;
        for (int i = 0; i < g->node_count; ++i) phi[i] += amp * std::exp(-0.5 * std::pow(((*g)[i] - c) / w, 2));
        CHECK(g_functional(phi, prob.background, mu) <= g0);
    }
    // constants are a symmetry of G
    auto shifted = rep.potential;
    for (auto& x : shifted) x += 0.7;
    CHECK(g_functional(shifted, prob.background, mu) == doctest::Approx(g0).epsilon(1e-10));
}

TEST_CASE("a bounded family of regularized solves has a finite uniform bound")
{
    auto g = make_grid(30, 1024);
    auto base = ke_problem(fs_weight(4, g), conic_divisor(0.5, 1.0));
    auto probs = bounded_family(base, {0.1, 0.05, 0.025});
    CHECK(probs.size() == 3);
    std::vector<SolveReport> reports;
    for (const auto& p : probs) reports.push_back(solve_ke_ode(p));
    CHECK(std::isfinite(uniform_bound_check(reports)));
}
