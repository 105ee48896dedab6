#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kelab/kernels.hpp"
#include "kelab/ma_solver.hpp"
#include "kelab/radial_geometry.hpp"

namespace kelab {

enum class FamilyKind { product, perturbed, conic, control };
enum class Perturbation { logistic, inverse_quadratic, log_log };

// u_L(t, s) = k log(1 + e^t) + e^s v(t) - beta s^2 (the last term only for the control family)
struct FamilyRecipe {
    FamilyKind kind = FamilyKind::product;
    double k = 4;
    Perturbation profile = Perturbation::logistic;
    double amplitude = 0.05;
    double a0 = 0.5;
    double beta = 0.5;
    bool bypass_precheck = false;
};

struct BaseGrid {
    std::vector<double> nodes;
    double spacing = 0;
    std::size_t size() const { return nodes.size(); }
};

BaseGrid make_base_grid(double s_min, double s_max, int count);

struct HessianCertificate {
    bool passed = true;
    double tol = 0;
    double min_tt = 0;
    double min_ss = 0;
    double min_det = 0;
    double worst_margin = 0;  // most negative scaled quantity; >= -tol on success
    double worst_t = 0;
    double worst_s = 0;
    double max_mixed = 0;  // largest |∂t∂s| seen
    double max_ss = 0;     // largest |∂s∂s| seen
};

// 2x2 second-difference test on a matrix u[fiber][node]
HessianCertificate joint_hessian_check(const std::vector<std::vector<double>>& u, const RadialGrid& fiber,
                                       const BaseGrid& base, double tol);

struct FiberFamily {
    FamilyRecipe recipe;
    BaseGrid base;
    GridPtr fiber;
    DivisorData divisor;
    std::vector<RadialWeight> twists;
    HessianCertificate precheck;
};

FiberFamily build_family(const FamilyRecipe& recipe, const BaseGrid& base, const GridPtr& fiber,
                         double precheck_tol = 1e-6);

struct RelativePotential {
    std::vector<std::vector<double>> columns;  // KE current u + phi_E per fibre
    std::vector<SolveReport> reports;
};

RelativePotential solve_fiberwise(const FiberFamily& family, double tol = 1e-10, Backend backend = Backend::openmp);
HessianCertificate base_positivity_check(const RelativePotential& rel, const FiberFamily& family, double tol = 1e-6);
double uniform_sup_check(const RelativePotential& rel, const FiberFamily& family, double s_lo, double s_hi);

// log ‖z^j‖² for the Narasimhan-Simha metric of m(K + L) on one fibre
double ns_log_norm(int j, int m, std::size_t fiber, const FiberFamily& family);
double ns_norm(int j, int m, std::size_t fiber, const FiberFamily& family);
std::vector<int> admissible_exponents(int m, const FiberFamily& family);

struct NSCertificate {
    bool passed = true;
    double min_second_difference = 0;
    std::vector<double> values;  // -log ‖z^j‖² per fibre
};

NSCertificate ns_convexity_check(int j, int m, const FiberFamily& family, double tol = 1e-8);

// Joint convexity of the level-l Bergman kernels (p = 1) for l = 1..levels.
HessianCertificate family_bergman_convexity(const FiberFamily& family, int levels, double tol = 1e-8,
                                            Backend backend = Backend::openmp);

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& s);

}  // namespace kelab
