#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kinex/core.hpp"
#include "kinex/error.hpp"
#include "kinex/grid.hpp"

namespace kinex {

// Number of midpoint lambda nodes used to average a random-lambda rule.
inline constexpr std::size_t kLambdaNodes = 16;

struct KernelAtom {
    double delta;
    double probability;
};

struct KernelEntry {
    std::uint32_t cell;
    double weight;
};

/// Transitions of one unordered node pair (k <= kp), agent 1 sitting at k.
///
/// The ordered pair (kp, k) is not stored: every rule is exchangeable, so its
/// agent-1 destinations are this pair's agent-2 destinations.
struct KernelPair {
    std::uint32_t k;
    std::uint32_t kp;
    std::uint32_t atom_begin, atom_end;      // into DiscreteKernel::atoms
    std::uint32_t first_begin, first_end;    // agent-1 destinations
    std::uint32_t second_begin, second_end;  // agent-2 destinations
    double truncated_wealth;                 // expected wealth lost above x_max
    bool identity;                           // nothing can move
};

/// Transfer kernel on a wealth grid.
///
/// Each delta atom of the rule maps the post-exchange wealths
/// (x_k + delta, x_kp - delta) onto the two bracketing nodes with weights that
/// keep both mass and wealth, so per-pair normalisation and zero bias survive
/// the discretisation. Entries with the same destination are merged.
struct DiscreteKernel {
    RuleSpec rule = RuleSpec::iglesias_almeida();
    std::vector<double> points;
    std::vector<KernelPair> pairs;
    std::vector<KernelAtom> atoms;
    std::vector<KernelEntry> entries;
    std::size_t truncated_pairs = 0;
    double max_relative_truncation = 0.0;

    std::size_t cells() const noexcept { return points.size(); }
    std::size_t pair_index(std::size_t k, std::size_t kp) const;
};

DiscreteKernel build_kernel(const RuleSpec& rule, const WealthGrid& grid);

struct KernelCheck {
    double max_normalization_error = 0.0;  // |sum of weights - 1|, either agent, or atoms
    double max_bias = 0.0;                 // |E[x_dest] - x_k| over agent-1 rows
    double max_relative_bias = 0.0;        // max_bias scaled by 1 / (x_k + x_kp)
    std::size_t worst_bias_pair = 0;
    // Pairs that push wealth past x_max lose it at the top node; they are
    // counted here and left out of the bias figures.
    std::size_t truncated_pairs = 0;
    bool zero_rows_identity = true;  // every row touching the zero node is the identity
    bool normalized = true;          // max_normalization_error <= 1e-12
    bool unbiased = true;            // max_relative_bias <= 1e-10
    bool passed() const noexcept { return normalized && unbiased && zero_rows_identity; }
};

KernelCheck check_kernel(const DiscreteKernel& kernel);

/// dm_k/dt of the discrete master equation.
///
/// Agents meet at unit rate per agent: an unordered pair {k, kp} fires with
/// rate m_k m_kp (m_k^2 / 2 on the diagonal), moving both agents to their
/// destinations. Sums to zero and conserves wealth up to rounding.
std::vector<double> rhs(const WealthGrid& grid, const DiscreteKernel& kernel);

/// dG/dt from the triple sum over (x, x', x_1): for every ordered pair the
/// expected change of |x + delta - x_1| weighted by f(x_1), divided by <x>.
double gini_rate(const WealthGrid& grid, const DiscreteKernel& kernel);

// l(x_k) from the kernel's delta atoms.
std::vector<double> kernel_mobility(const WealthGrid& grid, const DiscreteKernel& kernel);
double kernel_liquidity(const WealthGrid& grid, const DiscreteKernel& kernel);

// max_k l(x_k) / (2 <x>); bounded by 1 for unbiased rules.
double mobility_bound_check(const WealthGrid& grid, const DiscreteKernel& kernel);

struct IntegratorOptions {
    // Halve dt whenever a mass would turn negative; otherwise abort.
    bool adaptive = true;
    // Largest relative decrease any node's mass may take in one step.
    double max_relative_decrease = 0.1;
    double min_dt = 1e-12;
    // Store the grid every this many steps (0: initial and final only).
    std::size_t snapshot_every = 0;
    double step_mass_tolerance = 1e-12;
    double step_mean_tolerance = 1e-10;
    double cumulative_tolerance = 1e-8;
    // Stop before t_end once every configured target holds.
    std::optional<double> stop_gini_above;
    std::optional<double> stop_liquidity_below;
};

struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    double mass_drift = 0.0;  // relative to the initial grid
    double mean_drift = 0.0;
    double gini = 0.0;
    double gini_rate = 0.0;
    double liquidity = 0.0;
    double max_mobility_ratio = 0.0;
};

struct IntegrationReport {
    std::vector<StepRecord> steps;  // steps[0] is the initial state
    std::size_t halvings = 0;
    bool reached_targets = false;
    bool breached = false;
    std::string breach;
};

struct GridSnapshot {
    double t;
    std::vector<double> masses;
};

struct IntegrationResult {
    WealthGrid final_grid;
    std::vector<GridSnapshot> snapshots;
    IntegrationReport report;
};

class IntegrationAborted : public InvariantBreach {
public:
    IntegrationAborted(const std::string& what, IntegrationReport report)
        : InvariantBreach(what), report_(std::move(report)) {}
    const IntegrationReport& report() const noexcept { return report_; }

private:
    IntegrationReport report_;
};

/// Explicit Euler on the discrete master equation from t = 0 to t_end.
///
/// Every step checks mass, mean and positivity; a breach throws
/// IntegrationAborted whose report ends with the offending step.
IntegrationResult integrate(const WealthGrid& grid, const DiscreteKernel& kernel, double dt,
                            double t_end, const IntegratorOptions& options = {});

}  // namespace kinex
