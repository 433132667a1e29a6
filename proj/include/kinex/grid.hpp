#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace kinex {

/// Wealth axis layout. Both schemes carry a dedicated node at exactly x = 0
/// plus `cells` positive nodes, the last of which is x_max:
///   linear: x_k = k * x_max / cells
///   log:    x_min, ..., x_max geometrically spaced
struct GridSpec {
    enum class Scheme { Linear, Log };
    Scheme scheme = Scheme::Linear;
    double x_min = 0.0;  // first positive node (log scheme only)
    double x_max = 0.0;
    std::size_t cells = 0;

    static GridSpec linear(double x_max, std::size_t cells);
    static GridSpec log(double x_min, double x_max, std::size_t cells);

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

std::vector<double> grid_nodes(const GridSpec& spec);

struct PointDensity { double x; };
struct UniformDensity { double a, b; };
struct ExponentialDensity { double mean; };
using DensitySpec = std::variant<PointDensity, UniformDensity, ExponentialDensity>;

double density_mean(const DensitySpec& density);

/// Where a post-exchange wealth lands on the grid. Mass `w_lo` goes to node
/// `lo` and `w_hi` to node `hi`, chosen so that both mass and first moment are
/// reproduced. `excess` is the wealth lost when y lies beyond x_max.
struct NodeSplit {
    std::size_t lo;
    double w_lo;
    std::size_t hi;
    double w_hi;
    double excess;
};

/// Discretised density f(x, t): probability mass carried by each node.
///
/// Node k represents the cell between the midpoints to its neighbours; the
/// zero node's cell is [0, x_1 / 2]. Quadratures evaluate integrands at the
/// nodes, so mass placed on node 0 is wealth exactly zero.
class WealthGrid {
public:
    WealthGrid(std::vector<double> points, std::vector<double> masses);

    std::size_t size() const noexcept { return points_.size(); }
    std::span<const double> points() const noexcept { return points_; }
    std::span<const double> edges() const noexcept { return edges_; }
    std::span<const double> masses() const noexcept { return masses_; }
    double point(std::size_t k) const { return points_[k]; }
    double mass(std::size_t k) const { return masses_[k]; }
    double x_max() const noexcept { return points_.back(); }

    double total_mass() const;
    double mean() const;

    void assign_masses(std::vector<double> masses);

    NodeSplit split(double y) const;

private:
    std::vector<double> points_;
    std::vector<double> edges_;
    std::vector<double> masses_;
};

// Requires cells >= 16 and x_max >= 10 * density mean. Mass is 1 and the
// mean equals density_mean() exactly up to rounding.
WealthGrid build_grid(const GridSpec& spec, const DensitySpec& density);

// Point masses (wealth, mass), each split conservatively onto the grid.
WealthGrid grid_from_atoms(const GridSpec& spec,
                           const std::vector<std::pair<double, double>>& atoms);

/// Finite stand-in for the absolute-oligarchy density: mass 1 - 1/M at zero
/// and 1/M at M * mean. Requires M * mean <= x_max.
WealthGrid oligarchy_surrogate(const GridSpec& spec, double m, double mean_wealth = 1.0);

}  // namespace kinex
