#include "kinex/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kinex/error.hpp"
#include "kinex/format.hpp"

namespace kinex {

namespace {

void check_spec(const GridSpec& spec) {
    if (spec.cells < 1) throw InvalidArgument("grid needs at least one positive cell");
    if (!(spec.x_max > 0.0) || !std::isfinite(spec.x_max)) {
        throw InvalidArgument("grid x_max must be positive");
    }
    if (spec.scheme == GridSpec::Scheme::Log) {
        if (!(spec.x_min > 0.0 && spec.x_min < spec.x_max)) {
            throw InvalidArgument("log grid needs 0 < x_min < x_max");
        }
        if (spec.cells < 2) throw InvalidArgument("log grid needs at least two positive nodes");
    }
}

// Mass and first moment of the density over [lo, hi].
struct Moments {
    double m0;
    double m1;
};

Moments moments_on(const DensitySpec& density, double lo, double hi) {
    return std::visit(
        [&](const auto& d) -> Moments {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UniformDensity>) {
                const double a = std::max(lo, d.a);
                const double b = std::min(hi, d.b);
                if (!(b > a)) return {0.0, 0.0};
                const double width = d.b - d.a;
                return {(b - a) / width, (b * b - a * a) / (2.0 * width)};
            } else if constexpr (std::is_same_v<T, ExponentialDensity>) {
                const double mu = d.mean;
                const double ea = std::exp(-lo / mu);
                const double eb = std::isinf(hi) ? 0.0 : std::exp(-hi / mu);
                const double tail_b = std::isinf(hi) ? 0.0 : (hi + mu) * eb;
                return {ea - eb, (lo + mu) * ea - tail_b};
            } else {
                return {0.0, 0.0};
            }
        },
        density);
}

void fix_mean(std::vector<double>& masses, std::span<const double> x, double target) {
    double mean = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) mean += masses[k] * x[k];
    const double err = target - mean;
    if (err == 0.0) return;
    const auto j = static_cast<std::size_t>(
        std::max_element(masses.begin(), masses.end()) - masses.begin());
    // Shift a sliver of mass from the heaviest node towards the side that fixes the mean.
    std::size_t nb = 0;
    if (err > 0.0) {
        nb = j + 1 < x.size() ? j + 1 : j;
    } else {
        nb = j > 0 ? j - 1 : j;
    }
    if (nb == j) throw InvalidArgument("grid too narrow to represent the density mean");
    const double shift = err / (x[nb] - x[j]);
    if (shift > masses[j]) throw InvalidArgument("grid too coarse to correct the density mean");
    masses[j] -= shift;
    masses[nb] += shift;
}

void normalize(std::vector<double>& masses) {
    const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (!(total > 0.0)) throw InvalidArgument("density has no mass on the grid");
    for (double& m : masses) m /= total;
}

}  // namespace

GridSpec GridSpec::linear(double x_max, std::size_t cells) {
    return {Scheme::Linear, 0.0, x_max, cells};
}

GridSpec GridSpec::log(double x_min, double x_max, std::size_t cells) {
    return {Scheme::Log, x_min, x_max, cells};
}

std::vector<double> grid_nodes(const GridSpec& spec) {
    check_spec(spec);
    std::vector<double> nodes(spec.cells + 1, 0.0);
    const auto n = static_cast<double>(spec.cells);
    if (spec.scheme == GridSpec::Scheme::Linear) {
        for (std::size_t k = 1; k <= spec.cells; ++k) {
            nodes[k] = static_cast<double>(k) * spec.x_max / n;
        }
    } else {
        const double ratio = std::log(spec.x_max / spec.x_min);
        for (std::size_t k = 1; k <= spec.cells; ++k) {
            nodes[k] = spec.x_min * std::exp(ratio * static_cast<double>(k - 1) / (n - 1.0));
        }
        nodes[1] = spec.x_min;
    }
    nodes.back() = spec.x_max;
    return nodes;
}

double density_mean(const DensitySpec& density) {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, PointDensity>) return d.x;
            else if constexpr (std::is_same_v<T, UniformDensity>) return 0.5 * (d.a + d.b);
            else return d.mean;
        },
        density);
}

WealthGrid::WealthGrid(std::vector<double> points, std::vector<double> masses)
    : points_(std::move(points)), masses_(std::move(masses)) {
    if (points_.size() < 2) throw InvalidArgument("grid needs at least two nodes");
    if (points_.size() != masses_.size()) throw InvalidArgument("grid points/masses size mismatch");
    if (points_.front() != 0.0) throw InvalidArgument("grid must start with a node at zero");
    for (std::size_t k = 1; k < points_.size(); ++k) {
        if (!(points_[k] > points_[k - 1]) || !std::isfinite(points_[k])) {
            throw InvalidArgument("grid nodes must be finite and strictly increasing");
        }
    }
    for (double m : masses_) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("grid masses must be >= 0");
    }
    edges_.resize(points_.size() + 1);
    edges_.front() = 0.0;
    for (std::size_t k = 1; k < points_.size(); ++k) {
        edges_[k] = 0.5 * (points_[k - 1] + points_[k]);
    }
    edges_.back() = points_.back();
}

double WealthGrid::total_mass() const {
    return std::accumulate(masses_.begin(), masses_.end(), 0.0);
}

double WealthGrid::mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < points_.size(); ++k) s += masses_[k] * points_[k];
    return s / total_mass();
}

void WealthGrid::assign_masses(std::vector<double> masses) {
    if (masses.size() != points_.size()) throw InvalidArgument("grid masses size mismatch");
    masses_ = std::move(masses);
}

NodeSplit WealthGrid::split(double y) const {
    const std::size_t top = points_.size() - 1;
    if (!(y > 0.0)) return {0, 1.0, 0, 0.0, 0.0};
    if (y >= points_[top]) return {top, 1.0, top, 0.0, y - points_[top]};
    const auto it = std::upper_bound(points_.begin(), points_.end(), y);
    const auto hi = static_cast<std::size_t>(it - points_.begin());
    const std::size_t lo = hi - 1;
    if (points_[lo] == y) return {lo, 1.0, lo, 0.0, 0.0};
    const double w_hi = (y - points_[lo]) / (points_[hi] - points_[lo]);
    return {lo, 1.0 - w_hi, hi, w_hi, 0.0};
}

WealthGrid build_grid(const GridSpec& spec, const DensitySpec& density) {
    if (spec.cells < 16) throw InvalidArgument("grid needs at least 16 cells");
    const double target = density_mean(density);
    if (!(target > 0.0) || !std::isfinite(target)) {
        throw InvalidArgument("density mean must be positive");
    }
    if (spec.x_max < 10.0 * target) throw InvalidArgument("grid x_max must be >= 10 * mean");
    if (const auto* u = std::get_if<UniformDensity>(&density); u && !(u->b > u->a && u->a >= 0.0)) {
        throw InvalidArgument("uniform density needs 0 <= a < b");
    }
    if (const auto* p = std::get_if<PointDensity>(&density)) {
        return grid_from_atoms(spec, {{p->x, 1.0}});
    }

    auto nodes = grid_nodes(spec);
    std::vector<double> masses(nodes.size(), 0.0);
    // Hat-function projection per interval keeps mass and first moment.
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double a = nodes[k];
        const double b = nodes[k + 1];
        const Moments mo = moments_on(density, a, b);
        if (mo.m0 == 0.0) continue;
        const double upper = std::clamp((mo.m1 - a * mo.m0) / (b - a), 0.0, mo.m0);
        masses[k] += mo.m0 - upper;
        masses[k + 1] += upper;
    }
    masses.back() += moments_on(density, nodes.back(), INFINITY).m0;
    normalize(masses);
    fix_mean(masses, nodes, target);
    return WealthGrid(std::move(nodes), std::move(masses));
}

WealthGrid grid_from_atoms(const GridSpec& spec,
                           const std::vector<std::pair<double, double>>& atoms) {
    auto nodes = grid_nodes(spec);
    WealthGrid grid(nodes, std::vector<double>(nodes.size(), 0.0));
    std::vector<double> masses(nodes.size(), 0.0);
    for (const auto& [x, m] : atoms) {
        if (!(x >= 0.0) || x > spec.x_max) {
            throw InvalidArgument("point mass at " + format_exact(x) + " lies outside the grid");
        }
        if (!(m >= 0.0)) throw InvalidArgument("point masses must be non-negative");
        const NodeSplit s = grid.split(x);
        masses[s.lo] += m * s.w_lo;
        masses[s.hi] += m * s.w_hi;
    }
    grid.assign_masses(std::move(masses));
    return grid;
}

WealthGrid oligarchy_surrogate(const GridSpec& spec, double m, double mean_wealth) {
    if (!(m > 1.0)) throw InvalidArgument("oligarchy surrogate needs M > 1");
    if (m * mean_wealth > spec.x_max) {
        throw InvalidArgument("oligarchy surrogate needs M * mean <= x_max");
    }
    return grid_from_atoms(spec, {{0.0, 1.0 - 1.0 / m}, {m * mean_wealth, 1.0 / m}});
}

}  // namespace kinex
