#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace kelab {

struct RadialGrid {
    double half_width = 0;
    int node_count = 0;
    double spacing = 0;
    std::vector<double> nodes;

    int size() const { return node_count; }
    double operator[](int i) const { return nodes[static_cast<std::size_t>(i)]; }
    // index range of the nodes inside [lo, hi]
    std::pair<int, int> index_range(double lo, double hi) const;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(double half_width, int node_count);

// mass * max(t - position, 0)
struct Kink {
    double position = 0;
    double mass = 0;
};

class RadialWeight {
public:
    RadialWeight(GridPtr grid, std::vector<double> values, std::vector<double> first,
                 std::vector<double> second, double slope_minus, double slope_plus,
                 std::optional<double> bundle_degree = std::nullopt, std::vector<Kink> kinks = {});

    const GridPtr& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& first() const { return first_; }
    // u'' as a nodal density; kinks appear as split point masses
    const std::vector<double>& second() const { return second_; }
    const std::vector<Kink>& kinks() const { return kinks_; }
    double slope_minus() const { return slope_minus_; }
    double slope_plus() const { return slope_plus_; }
    double bundle_degree() const { return bundle_degree_; }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    int size() const { return static_cast<int>(values_.size()); }

    RadialWeight operator+(const RadialWeight& other) const;
    RadialWeight operator-(const RadialWeight& other) const;
    RadialWeight operator+(double c) const;
    RadialWeight operator-(double c) const { return *this + (-c); }
    RadialWeight scaled(double c) const;

private:
    GridPtr grid_;
    std::vector<double> values_, first_, second_;
    double slope_minus_, slope_plus_, bundle_degree_;
    std::vector<Kink> kinks_;
};

inline RadialWeight operator*(double c, const RadialWeight& w) { return w.scaled(c); }

RadialWeight fs_weight(double k, const GridPtr& grid);
RadialWeight linear_weight(double a, const GridPtr& grid);
RadialWeight constant_weight(double c, const GridPtr& grid);
RadialWeight kink_weight(double position, double mass, const GridPtr& grid);
// Weight given only by nodal values; derivatives by finite differences.
RadialWeight sampled_weight(const GridPtr& grid, std::vector<double> values, double slope_minus,
                            double slope_plus, std::optional<double> bundle_degree = std::nullopt);
RadialWeight with_point_mass_at_infinity(const RadialWeight& w, double a);

double weight_mass(const RadialWeight& w, double tol = 1e-6);
std::pair<double, double> lelong_numbers(const RadialWeight& w);
bool positively_curved(const RadialWeight& w, double tol = 1e-10);
RadialWeight mollify_weight(const RadialWeight& w, double eps);

enum class SupportPoint { zero, infinity };

struct DivisorPart {
    SupportPoint point = SupportPoint::zero;
    double coefficient = 0;
    double kodaira = 0;  // coefficient of E_X at the same point
};

struct DivisorData {
    std::vector<DivisorPart> parts;

    double coefficient_at(SupportPoint p) const;
    double kodaira_at(SupportPoint p) const;
    double total() const;
    double total_kodaira() const;
    bool empty() const;
    bool klt() const;
    // E_delta = E + delta E_X
    DivisorData perturbed(double delta) const;
    DivisorData scaled(double c) const;
    bool operator==(const DivisorData& o) const;
};

DivisorData make_divisor(std::vector<DivisorPart> parts);
DivisorData conic_divisor(double a0, double c0 = 0);

std::vector<double> log_frame_norm(SupportPoint p, const RadialGrid& grid, double eps);
std::vector<double> log_divisor_frame_norm(const DivisorData& d, const RadialGrid& grid, double eps);
std::vector<double> divisor_frame_norm(const DivisorData& d, const RadialGrid& grid, double eps);
// phi_{E,eps}; at eps = 0 this is a_0 t with Lelong numbers (a_0, a_inf)
RadialWeight divisor_weight(const DivisorData& d, const GridPtr& grid, double eps);

}  // namespace kelab
