#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kinex {

struct ExchangeOutcome;

/// Agent wealths of a closed economy.
///
/// The total is cached at construction and is never recomputed while the
/// population evolves; exchanges move a single delta between two agents, so
/// the cached value is the conserved quantity and validate_population() audits
/// the vector against it on demand.
class Population {
public:
    // Caches the sum of `wealth`. Throws InvalidArgument when N < 2.
    explicit Population(std::vector<double> wealth);
    // Keeps the given cached total as is (used for audits and snapshots).
    Population(std::vector<double> wealth, double cached_total);

    static Population equal(std::size_t n, double mean_wealth = 1.0);

    std::size_t size() const noexcept { return wealth_.size(); }
    double total() const noexcept { return total_; }
    double mean() const noexcept { return total_ / static_cast<double>(wealth_.size()); }
    std::span<const double> wealth() const noexcept { return wealth_; }
    double operator[](std::size_t i) const { return wealth_[i]; }

    // Number of exchanges whose result was snapped to an exact zero.
    std::size_t snapped_exchanges() const noexcept { return snapped_; }

    friend bool operator==(const Population& a, const Population& b) {
        return a.wealth_ == b.wealth_ && a.total_ == b.total_;
    }

private:
    friend void apply_exchange(Population&, const ExchangeOutcome&);

    std::vector<double> wealth_;
    double total_ = 0.0;
    std::size_t snapped_ = 0;
};

enum class RuleKind { ClassicLoser, YardSale, UnbiasedLoser, IglesiasAlmeida };

/// Exchange rule and its lambda setting.
class RuleSpec {
public:
    static RuleSpec fixed(RuleKind kind, double lambda);
    // lambda resampled per exchange from Uniform[0, 1].
    static RuleSpec uniform_lambda(RuleKind kind);
    static RuleSpec iglesias_almeida();

    RuleKind kind() const noexcept { return kind_; }
    bool has_lambda() const noexcept { return kind_ != RuleKind::IglesiasAlmeida; }
    bool random_lambda() const noexcept { return random_; }
    // Fixed lambda; 1 for IglesiasAlmeida (unused), 0.5 (the mean) when random.
    double lambda() const noexcept { return lambda_; }
    bool unbiased() const noexcept { return kind_ != RuleKind::ClassicLoser; }

    friend bool operator==(const RuleSpec&, const RuleSpec&) = default;

private:
    RuleSpec(RuleKind kind, double lambda, bool random)
        : kind_(kind), lambda_(lambda), random_(random) {}

    RuleKind kind_;
    double lambda_;
    bool random_;
};

std::string_view rule_name(RuleKind kind);

/// One realised exchange: agent i gains delta, agent j loses it.
struct ExchangeOutcome {
    std::size_t i = 0;
    std::size_t j = 0;
    double delta = 0.0;
    // epsilon in {0, 1} for the loser rules, eta in {-1, +1} otherwise.
    int coin = 0;
    double lambda_used = 0.0;
};

/// x_i += delta, x_j -= delta.
///
/// Requires -x_i <= delta <= x_j. A result that undershoots zero by less than
/// 1e-15 * mean wealth is snapped to exactly zero (and counted); anything
/// larger throws ContractViolation.
void apply_exchange(Population& pop, const ExchangeOutcome& out);

struct PopulationViolation {
    enum class Kind { Negative, TotalMismatch };
    Kind kind;
    std::size_t index = 0;  // agent for Negative
    double value = 0.0;     // offending wealth, or recomputed sum for TotalMismatch
};

struct PopulationReport {
    std::vector<PopulationViolation> violations;
    bool valid() const noexcept { return violations.empty(); }
};

// Sum must match the cached total within 1e-12 relative.
PopulationReport validate_population(const Population& pop);

// "# kinex population N=<n> t=<sweeps>" followed by one wealth per line.
void write_population_snapshot(std::ostream& os, const Population& pop, std::uint64_t sweeps);

struct PopulationSnapshot {
    Population population;
    std::optional<std::uint64_t> sweeps;
};

// Accepts the snapshot format; a missing header is tolerated, '#' lines skipped.
PopulationSnapshot read_population_snapshot(std::istream& is);
PopulationSnapshot read_population_snapshot_file(const std::string& path);

}  // namespace kinex
