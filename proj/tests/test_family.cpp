#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <string>
#include <vector>

#include "kelab/errors.hpp"
#include "kelab/family.hpp"
#include "kelab/numerics.hpp"

using namespace kelab;

namespace {

std::vector<std::vector<double>> sample(const BaseGrid& base, const RadialGrid& fiber, double (*f)(double, double))
{
    std::vector<std::vector<double>> u;
    for (double s : base.nodes) {
        std::vector<double> col;
        for (double t : fiber.nodes) col.push_back(f(t, s));
        u.push_back(col);
    }
    return u;
}

FiberFamily family_of(FamilyKind kind, int n = 1024, bool bypass = false)
{
    FamilyRecipe r;
    r.kind = kind;
    r.bypass_precheck = bypass;
    return build_family(r, make_base_grid(-3, 3, 41), make_grid(30, n));
}

}  // namespace

TEST_CASE("Hessian certificate on explicit functions")
{
    auto base = make_base_grid(-2, 2, 21);
    auto fiber = make_grid(3, 61);
    CHECK(joint_hessian_check(sample(base, *fiber, [](double t, double s) { return t * t + s * s; }), *fiber, base, 1e-8).passed);
    CHECK_FALSE(joint_hessian_check(sample(base, *fiber, [](double t, double s) { return t * t - 0.5 * s * s; }), *fiber, base, 1e-8).passed);
    // both diagonal entries positive, determinant negative
    auto saddle = joint_hessian_check(sample(base, *fiber, [](double t, double s) { return t * t + s * s + 3 * t * s; }), *fiber, base, 1e-8);
    CHECK_FALSE(saddle.passed);
    CHECK(saddle.min_tt > 0);
    CHECK(saddle.min_det < 0);
}

TEST_CASE("product family: fibrewise solutions do not depend on s")
{
    auto fam = family_of(FamilyKind::product);
    auto rel = solve_fiberwise(fam);
    for (const auto& col : rel.columns) CHECK(sup_distance(col, rel.columns.front()) == 0.0);
    CHECK(base_positivity_check(rel, fam).passed);
}

TEST_CASE("accepted families are positive, the control is not")
{
    for (auto kind : {FamilyKind::perturbed, FamilyKind::conic}) {
        auto fam = family_of(kind);
        CHECK(base_positivity_check(solve_fiberwise(fam), fam, 1e-6).passed);
    }
    try {
        family_of(FamilyKind::control);
        FAIL("control family should be rejected");
    } catch (const ConfigurationError& e) {
        CHECK(std::string(e.what()).find("(t, s)") != std::string::npos);
    }
    auto control = family_of(FamilyKind::control, 1024, true);
    auto cert = base_positivity_check(solve_fiberwise(control), control, 1e-6);
    CHECK_FALSE(cert.passed);
    CHECK(cert.worst_margin < -0.1);
}

TEST_CASE("perturbation profiles")
{
    auto base = make_base_grid(-3, 3, 41);
    auto fiber = make_grid(30, 1024);
    FamilyRecipe r;
    r.kind = FamilyKind::perturbed;
    r.profile = Perturbation::inverse_quadratic;
    CHECK_THROWS_AS(build_family(r, base, fiber), ConfigurationError);
    r.profile = Perturbation::log_log;
    CHECK_NOTHROW(build_family(r, base, fiber));
    CHECK_THROWS_AS(build_family(r, make_base_grid(-3, 6, 61), fiber), ConfigurationError);
}

TEST_CASE("serial and OpenMP fibre solves agree")
{
    auto fam = family_of(FamilyKind::perturbed, 512);
    auto a = solve_fiberwise(fam, 1e-10, Backend::serial);
    auto b = solve_fiberwise(fam, 1e-10, Backend::openmp);
    for (std::size_t j = 0; j < a.columns.size(); ++j) CHECK(a.columns[j] == b.columns[j]);
}

TEST_CASE("a failing fibre is reported with its index")
{
    auto fam = family_of(FamilyKind::product, 256);
    fam.twists[7] = fs_weight(1.5, fam.fiber);
    try {
        solve_fiberwise(fam);
        FAIL("expected a fibre failure");
    } catch (const FiberSolveError& e) {
        CHECK(e.fiber_index() == 7);
    }
}

TEST_CASE("NS norms on the product family are Beta integrals")
{
    // 2π ∫ e^{(j/m + 1) t} (1 + e^t)^{-4} dt = 2π B(j/m + 1, 3 - j/m)
    auto fam = family_of(FamilyKind::product, 4096);
    for (int m : {1, 2, 3}) {
        auto js = admissible_exponents(m, fam);
        CHECK(js.size() == std::size_t(2 * m + 1));
        for (int j : js) {
            double x = double(j) / m;
            double exact = m * std::log(2 * std::numbers::pi * std::beta(x + 1, 3 - x));
            CHECK(ns_log_norm(j, m, 5, fam) == doctest::Approx(exact).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(ns_log_norm(3, 1, 0, fam), ConfigurationError);
}

TEST_CASE("NS convexity and a grid-stable sup bound on the perturbed family")
{
    auto fam = family_of(FamilyKind::perturbed);
    for (int m : {1, 2, 3})
        for (int j : admissible_exponents(m, fam)) CHECK(ns_convexity_check(j, m, fam).passed);
    auto fine = family_of(FamilyKind::perturbed, 2047);
    double b1 = uniform_sup_check(solve_fiberwise(fam), fam, -2, 2);
    double b2 = uniform_sup_check(solve_fiberwise(fine), fine, -2, 2);
    CHECK(std::isfinite(b1));
    CHECK(std::abs(b1 - b2) < 1e-4);
}

TEST_CASE("Bergman kernels of the perturbed family are jointly convex")
{
    FamilyRecipe r;
    r.kind = FamilyKind::perturbed;
    auto fam = build_family(r, make_base_grid(-3, 3, 21), make_grid(80, 4401));
    auto cert = family_bergman_convexity(fam, 3, 1e-8);
    CHECK(cert.passed);
}

TEST_CASE("family kind names round-trip")
{
    for (auto k : {FamilyKind::product, FamilyKind::perturbed, FamilyKind::conic, FamilyKind::control})
        CHECK(family_kind_from_string(to_string(k)) == k);
    CHECK_THROWS(family_kind_from_string("torus"));
}
