#include "kelab/radial_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kelab/errors.hpp"
#include "kelab/numerics.hpp"

namespace kelab {

namespace {

void require_same_grid(const RadialWeight& a, const RadialWeight& b)
{
    if (a.grid() != b.grid() && (a.grid()->node_count != b.grid()->node_count ||
                                 a.grid()->half_width != b.grid()->half_width))
        throw std::invalid_argument("weights live on different grids");
}

// adds the nodal point mass of a kink to a second-derivative array
void deposit_kink(const RadialGrid& g, const Kink& k, std::vector<double>& second, double sign)
{
    double x = (k.position - g.nodes.front()) / g.spacing;
    if (x < 0 || x > g.node_count - 1) return;
    int i = std::min(static_cast<int>(std::floor(x)), g.node_count - 2);
    double theta = x - i;
    second[i] += sign * k.mass * (1 - theta) / g.spacing;
    second[i + 1] += sign * k.mass * theta / g.spacing;
}

}  // namespace

std::pair<int, int> RadialGrid::index_range(double lo, double hi) const
{
    const double slack = 1e-9 * spacing;
    int a = 0, b = node_count - 1;
    while (a < node_count && nodes[a] < lo - slack) ++a;
    while (b >= 0 && nodes[b] > hi + slack) --b;
    if (a > b) throw std::invalid_argument("index_range: no nodes inside the requested interval");
    return {a, b};
}

GridPtr make_grid(double half_width, int node_count)
{
    if (!std::isfinite(half_width) || half_width <= 0)
        throw std::invalid_argument("make_grid: degenerate domain, half width must be positive");
    if (node_count < 3) throw std::invalid_argument("make_grid: need at least 3 nodes");
    auto g = std::make_shared<RadialGrid>();
    g->half_width = half_width;
    g->node_count = node_count;
    g->spacing = 2 * half_width / (node_count - 1);
    g->nodes.resize(node_count);
    // symmetric construction so that t_i = -t_{N-1-i} holds exactly
    for (int i = 0; i < node_count; ++i) {
        int j = node_count - 1 - i;
        g->nodes[i] = half_width * static_cast<double>(i - j) / (node_count - 1);
    }
    return g;
}

RadialWeight::RadialWeight(GridPtr grid, std::vector<double> values, std::vector<double> first,
                           std::vector<double> second, double slope_minus, double slope_plus,
                           std::optional<double> bundle_degree, std::vector<Kink> kinks)
    : grid_(std::move(grid)), values_(std::move(values)), first_(std::move(first)),
      second_(std::move(second)), slope_minus_(slope_minus), slope_plus_(slope_plus),
      bundle_degree_(bundle_degree.value_or(slope_plus - slope_minus)), kinks_(std::move(kinks))
{
    if (!grid_) throw std::invalid_argument("RadialWeight: null grid");
    const auto n = static_cast<std::size_t>(grid_->node_count);
    if (values_.size() != n || first_.size() != n || second_.size() != n)
        throw std::invalid_argument("RadialWeight: profile length does not match grid");
    if (!std::isfinite(slope_minus_) || !std::isfinite(slope_plus_) || !std::isfinite(bundle_degree_))
        throw std::invalid_argument("RadialWeight: slopes must be finite");
}

RadialWeight RadialWeight::operator+(const RadialWeight& o) const
{
    require_same_grid(*this, o);
    auto v = values_, d1 = first_, d2 = second_;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] += o.values_[i];
        d1[i] += o.first_[i];
        d2[i] += o.second_[i];
    }
    auto k = kinks_;
    k.insert(k.end(), o.kinks_.begin(), o.kinks_.end());
    return RadialWeight(grid_, std::move(v), std::move(d1), std::move(d2), slope_minus_ + o.slope_minus_,
                        slope_plus_ + o.slope_plus_, bundle_degree_ + o.bundle_degree_, std::move(k));
}

RadialWeight RadialWeight::operator-(const RadialWeight& o) const { return *this + o.scaled(-1); }

RadialWeight RadialWeight::operator+(double c) const
{
    auto v = values_;
    for (auto& x : v) x += c;
    return RadialWeight(grid_, std::move(v), first_, second_, slope_minus_, slope_plus_, bundle_degree_,
                        kinks_);
}

RadialWeight RadialWeight::scaled(double c) const
{
    auto v = values_, d1 = first_, d2 = second_;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= c;
        d1[i] *= c;
        d2[i] *= c;
    }
    auto k = kinks_;
    for (auto& kk : k) kk.mass *= c;
    return RadialWeight(grid_, std::move(v), std::move(d1), std::move(d2), c * slope_minus_, c * slope_plus_,
                        c * bundle_degree_, std::move(k));
}

RadialWeight fs_weight(double k, const GridPtr& grid)
{
    if (!std::isfinite(k) || k < 0) throw std::invalid_argument("fs_weight: degree must be >= 0");
    const auto n = static_cast<std::size_t>(grid->node_count);
    std::vector<double> v(n), d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = grid->nodes[i];
        double s = logistic(t);
        v[i] = k * softplus(t);
        d1[i] = k * s;
        d2[i] = k * s * logistic(-t);
    }
    return RadialWeight(grid, std::move(v), std::move(d1), std::move(d2), 0.0, k);
}

RadialWeight linear_weight(double a, const GridPtr& grid)
{
    const auto n = static_cast<std::size_t>(grid->node_count);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a * grid->nodes[i];
    return RadialWeight(grid, std::move(v), std::vector<double>(n, a), std::vector<double>(n, 0.0), a, a, a);
}

RadialWeight constant_weight(double c, const GridPtr& grid)
{
    const auto n = static_cast<std::size_t>(grid->node_count);
    return RadialWeight(grid, std::vector<double>(n, c), std::vector<double>(n, 0.0),
                        std::vector<double>(n, 0.0), 0.0, 0.0);
}

RadialWeight kink_weight(double position, double mass, const GridPtr& grid)
{
    if (!std::isfinite(position) || !std::isfinite(mass))
        throw std::invalid_argument("kink_weight: non-finite input");
    const auto n = static_cast<std::size_t>(grid->node_count);
    std::vector<double> v(n), d1(n), d2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double x = grid->nodes[i] - position;
        v[i] = mass * std::max(x, 0.0);
        d1[i] = x > 0 ? mass : (x < 0 ? 0.0 : 0.5 * mass);
    }
    Kink k{position, mass};
    deposit_kink(*grid, k, d2, 1.0);
    return RadialWeight(grid, std::move(v), std::move(d1), std::move(d2), 0.0, mass, std::nullopt, {k});
}

RadialWeight sampled_weight(const GridPtr& grid, std::vector<double> values, double slope_minus,
                            double slope_plus, std::optional<double> bundle_degree)
{
    const int n = grid->node_count;
    if (static_cast<int>(values.size()) != n) throw std::invalid_argument("sampled_weight: length mismatch");
    const double h = grid->spacing;
    std::vector<double> d1(n), d2(n);
    for (int i = 1; i + 1 < n; ++i) {
        d1[i] = (values[i + 1] - values[i - 1]) / (2 * h);
        d2[i] = (values[i + 1] - 2 * values[i] + values[i - 1]) / (h * h);
    }
    d1[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h);
    d1[n - 1] = (3 * values[n - 1] - 4 * values[n - 2] + values[n - 3]) / (2 * h);
    d2[0] = d2[1];
    d2[n - 1] = d2[n - 2];
    return RadialWeight(grid, std::move(values), std::move(d1), std::move(d2), slope_minus, slope_plus,
                        bundle_degree);
}

RadialWeight with_point_mass_at_infinity(const RadialWeight& w, double a)
{
    return RadialWeight(w.grid(), w.values(), w.first(), w.second(), w.slope_minus(), w.slope_plus(),
                        w.bundle_degree() + a, w.kinks());
}

double weight_mass(const RadialWeight& w, double tol)
{
    const double mass = w.slope_plus() - w.slope_minus();
    const auto& u = w.values();
    const int n = w.size();
    const double h = w.grid()->spacing;
    // trapezoid sum of the discrete second differences telescopes to this
    double integrated = (u[n - 1] - u[n - 2]) / h - (u[1] - u[0]) / h;
    if (std::abs(integrated - mass) > tol * std::max(1.0, std::abs(mass)))
        throw ConfigurationError("weight_mass: declared mass " + std::to_string(mass) +
                                 " but the profile integrates to " + std::to_string(integrated));
    return mass;
}

std::pair<double, double> lelong_numbers(const RadialWeight& w)
{
    return {w.slope_minus(), w.bundle_degree() - w.slope_plus()};
}

bool positively_curved(const RadialWeight& w, double tol)
{
    const auto& u = w.values();
    for (std::size_t i = 1; i + 1 < u.size(); ++i)
        if (u[i + 1] - 2 * u[i] + u[i - 1] < -tol) return false;
    return true;
}

RadialWeight mollify_weight(const RadialWeight& w, double eps)
{
    if (!(eps > 0) || !std::isfinite(eps)) throw std::invalid_argument("mollify_weight: eps must be positive");
    if (w.kinks().empty()) return w;
    const auto& g = *w.grid();
    auto v = w.values(), d1 = w.first(), d2 = w.second();
    for (const Kink& k : w.kinks()) {
        deposit_kink(g, k, d2, -1.0);
        for (int i = 0; i < g.node_count; ++i) {
            double x = g.nodes[i] - k.position;
            double y = x / eps;
            v[i] += k.mass * (eps * softplus(y) - std::max(x, 0.0));
            d1[i] += k.mass * (logistic(y) - (x > 0 ? 1.0 : (x < 0 ? 0.0 : 0.5)));
            d2[i] += k.mass * logistic(y) * logistic(-y) / eps;
        }
    }
    return RadialWeight(w.grid(), std::move(v), std::move(d1), std::move(d2), w.slope_minus(), w.slope_plus(),
                        w.bundle_degree());
}

double DivisorData::coefficient_at(SupportPoint p) const
{
    double s = 0;
    for (const auto& d : parts)
        if (d.point == p) s += d.coefficient;
    return s;
}

double DivisorData::kodaira_at(SupportPoint p) const
{
    double s = 0;
    for (const auto& d : parts)
        if (d.point == p) s += d.kodaira;
    return s;
}

double DivisorData::total() const
{
    return coefficient_at(SupportPoint::zero) + coefficient_at(SupportPoint::infinity);
}

double DivisorData::total_kodaira() const
{
    return kodaira_at(SupportPoint::zero) + kodaira_at(SupportPoint::infinity);
}

bool DivisorData::empty() const { return total() == 0; }

bool DivisorData::klt() const
{
    return std::all_of(parts.begin(), parts.end(), [](const DivisorPart& d) { return d.coefficient < 1; });
}

DivisorData DivisorData::perturbed(double delta) const
{
    DivisorData r = *this;
    for (auto& d : r.parts) d.coefficient += delta * d.kodaira;
    return r;
}

DivisorData DivisorData::scaled(double c) const
{
    DivisorData r = *this;
    for (auto& d : r.parts) d.coefficient *= c;
    return r;
}

bool DivisorData::operator==(const DivisorData& o) const
{
    for (auto p : {SupportPoint::zero, SupportPoint::infinity})
        if (coefficient_at(p) != o.coefficient_at(p) || kodaira_at(p) != o.kodaira_at(p)) return false;
    return true;
}

DivisorData make_divisor(std::vector<DivisorPart> parts)
{
    bool seen[2] = {false, false};
    for (const auto& d : parts) {
        if (!std::isfinite(d.coefficient) || d.coefficient < 0 || !std::isfinite(d.kodaira) || d.kodaira < 0)
            throw std::invalid_argument("make_divisor: coefficients must be finite and >= 0");
        int idx = d.point == SupportPoint::zero ? 0 : 1;
        if (seen[idx]) throw std::invalid_argument("make_divisor: repeated support point");
        seen[idx] = true;
    }
    return DivisorData{std::move(parts)};
}

DivisorData conic_divisor(double a0, double c0)
{
    return make_divisor({DivisorPart{SupportPoint::zero, a0, c0}});
}

std::vector<double> log_frame_norm(SupportPoint p, const RadialGrid& grid, double eps)
{
    if (!std::isfinite(eps) || eps < 0) throw std::invalid_argument("frame norm: eps must be >= 0");
    std::vector<double> out(grid.nodes.size());
    const double e2 = eps * eps;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double t = grid.nodes[i];
        double lg = p == SupportPoint::zero ? log_sigma(t) : log_one_minus_sigma(t);
        out[i] = e2 == 0 ? lg : lg + std::log1p(e2 * std::exp(-lg));
    }
    return out;
}

std::vector<double> log_divisor_frame_norm(const DivisorData& d, const RadialGrid& grid, double eps)
{
    std::vector<double> out(grid.nodes.size(), 0.0);
    for (const auto& part : d.parts) {
        if (part.coefficient == 0) continue;
        auto lf = log_frame_norm(part.point, grid, eps);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += part.coefficient * lf[i];
    }
    return out;
}

std::vector<double> divisor_frame_norm(const DivisorData& d, const RadialGrid& grid, double eps)
{
    auto out = log_divisor_frame_norm(d, grid, eps);
    for (auto& x : out) x = std::exp(x);
    return out;
}

RadialWeight divisor_weight(const DivisorData& d, const GridPtr& grid, double eps)
{
    if (!std::isfinite(eps) || eps < 0) throw std::invalid_argument("divisor_weight: eps must be >= 0");
    const auto n = static_cast<std::size_t>(grid->node_count);
    std::vector<double> v(n, 0.0), d1(n, 0.0), d2(n, 0.0);
    const double e2 = eps * eps;
    for (const auto& part : d.parts) {
        const double a = part.coefficient;
        if (a == 0) continue;
        const bool at_zero = part.point == SupportPoint::zero;
        auto lf = log_frame_norm(part.point, *grid, eps);
        for (std::size_t i = 0; i < n; ++i) {
            double t = grid->nodes[i];
            double s = logistic(t), sm = logistic(-t);
            double lg = at_zero ? log_sigma(t) : log_one_minus_sigma(t);
            double r = 1.0 / (1.0 + e2 * std::exp(-lg));
            double g1 = at_zero ? sm : -s;               // g'/g
            double g2 = at_zero ? sm * (sm - s) : -s * (sm - s);  // g''/g
            v[i] += a * (lf[i] + softplus(t));
            d1[i] += a * (r * g1 + s);
            d2[i] += a * (r * g2 - r * r * g1 * g1 + s * sm);
        }
    }
    const double a0 = d.coefficient_at(SupportPoint::zero);
    const double total = d.total();
    if (eps == 0) return RadialWeight(grid, std::move(v), std::move(d1), std::move(d2), a0, a0, total);
    return RadialWeight(grid, std::move(v), std::move(d1), std::move(d2), 0.0, total, total);
}

}  // namespace kelab
