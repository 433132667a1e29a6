#pragma once

#include <span>
#include <vector>

#include "kinex/core.hpp"
#include "kinex/grid.hpp"

namespace kinex {

inline constexpr double kDefaultEpsZero = 1e-9;

struct MetricsRecord {
    double t = 0.0;  // sweeps
    double gini = 0.0;
    double liquidity = 0.0;
    double mean_wealth = 0.0;
    double top_share = 0.0;
    double zero_fraction = 0.0;
    double gini_gap = 0.0;
};

/// Gini index of a finite population, (sum_ij |x_i - x_j|) / (2 N^2 <x>).
///
/// Evaluated on the sorted wealths as sum_i (i * x_(i) - prefix_i) in long
/// double, so tied values contribute nothing and the result does not depend on
/// agent order. Throws DegenerateInput when the total is zero.
double gini_population(std::span<const double> wealth);
double gini_population(const Population& pop);

// Double-integral Gini on grid masses. Throws InvalidArgument if the total
// mass is off 1 by more than 1e-8, DegenerateInput if the mean is zero.
double gini_grid(const WealthGrid& grid);

// l(x_k) = sum_k' m_k' E|delta|(x_k, x_k'). Random lambda uses its mean 1/2.
std::vector<double> mobility_profile(const WealthGrid& grid, const RuleSpec& rule);

// L = sum_k l(x_k) m_k / (2 <x>).
double liquidity_grid(const WealthGrid& grid, const RuleSpec& rule);

// One sweep is N/2 exchanges (integer division), so each agent trades about
// once. L_hat = sum |delta| / (N <x>).
std::size_t exchanges_per_sweep(std::size_t n);
double liquidity_empirical(std::span<const double> sweep_abs_deltas, const Population& pop);
double liquidity_empirical(double sum_abs_delta, const Population& pop);

struct CondensationReport {
    double gini_gap = 0.0;       // (N - 1) / N - G
    double zero_fraction = 0.0;  // share of agents with wealth < eps_zero * <x>
    double top_share = 0.0;      // richest agent's share of the total
};

CondensationReport condensation_report(const Population& pop, double eps_zero = kDefaultEpsZero);

MetricsRecord make_record(double t, const Population& pop, double liquidity,
                          double eps_zero = kDefaultEpsZero);

}  // namespace kinex
