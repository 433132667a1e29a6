#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kinex/core.hpp"
#include "kinex/metrics.hpp"
#include "kinex/rng.hpp"
#include "kinex/rules.hpp"

namespace kinex {

struct EqualInitial {};
// i.i.d. Uniform(0, 2), rescaled so the total is exactly N.
struct UniformInitial {};
struct FileInitial { std::string path; };
struct GivenInitial { Population population; };
using InitialCondition = std::variant<EqualInitial, UniformInitial, FileInitial, GivenInitial>;

// Condensed when every configured threshold fires on the latest record.
struct StopCriteria {
    std::optional<double> gini_gap_below;
    std::optional<double> liquidity_below;
    bool active() const noexcept { return gini_gap_below || liquidity_below; }
    bool met(const MetricsRecord& rec) const;
};

enum class PairSelection {
    // i != j uniform over ordered pairs, independently for every exchange.
    RandomPairs,
    // Each sweep is a uniformly random perfect matching (N even), so every
    // agent trades exactly once per sweep.
    RandomMatching,
};

struct SimConfig {
    std::size_t n = 2;
    RuleSpec rule = RuleSpec::fixed(RuleKind::YardSale, 0.5);
    InitialCondition initial = EqualInitial{};
    std::uint64_t seed = 0;
    std::uint64_t max_sweeps = 1;
    std::uint64_t record_every = 1;
    StopCriteria stop;
    double eps_zero = kDefaultEpsZero;
    PairSelection pairing = PairSelection::RandomPairs;
};

// Throws InvalidArgument on N < 2, zero sweeps, negative thresholds, ...
void validate_config(const SimConfig& config);

enum class StopReason { MaxSweeps, Condensed };

struct Trajectory {
    std::vector<MetricsRecord> records;
    Population final_population;
    StopReason stop_reason = StopReason::MaxSweeps;
    std::uint64_t sweeps_run = 0;
};

struct EnsembleSummary {
    std::size_t replicas = 0;
    std::vector<double> t;
    std::vector<double> gini_mean, gini_std;
    std::vector<double> liquidity_mean, liquidity_std;
    std::vector<double> gini_gap_mean;
};

struct RunHooks {
    std::uint64_t snapshot_every = 0;
    std::function<void(const Population&, std::uint64_t)> on_snapshot;
};

Population make_initial_population(const SimConfig& config, RngStream& rng);

/// Exchange between a given pair, drawing only the rule's randomness.
template <UniformSource Source>
ExchangeOutcome exchange(Population& pop, const RuleSpec& rule, std::size_t i, std::size_t j,
                         Source& rng) {
    const DeltaSample s = sample_delta(rule, pop[i], pop[j], rng);
    ExchangeOutcome out{i, j, s.delta, s.coin, s.lambda_used};
    apply_exchange(pop, out);
    return out;
}

/// One exchange between a uniformly drawn ordered pair i != j.
template <UniformSource Source>
ExchangeOutcome step(Population& pop, const RuleSpec& rule, Source& rng) {
    const auto n = static_cast<std::uint64_t>(pop.size());
    const auto i = static_cast<std::size_t>(rng.below(n));
    auto j = static_cast<std::size_t>(rng.below(n - 1));
    if (j >= i) ++j;
    return exchange(pop, rule, i, j, rng);
}

// Sequential and deterministic for a given (config, stream id).
Trajectory run(const SimConfig& config, std::uint64_t stream_id = 0, const RunHooks& hooks = {});

/// Independent replicas on stream ids 0..R-1, run to max_sweeps (stop
/// criteria are ignored so every replica shares one time axis). `threads` = 0
/// uses KINEX_THREADS or the hardware concurrency. Results are ordered by
/// replica id whatever the completion order.
std::vector<Trajectory> run_replicas(const SimConfig& config, std::size_t replicas,
                                     std::size_t threads = 0);

EnsembleSummary summarize(const std::vector<Trajectory>& replicas);

EnsembleSummary run_ensemble(const SimConfig& config, std::size_t replicas,
                             std::size_t threads = 0);

std::size_t worker_threads(std::size_t requested = 0);

}  // namespace kinex
