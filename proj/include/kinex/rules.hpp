#pragma once

#include <array>
#include <cstddef>

#include "kinex/core.hpp"
#include "kinex/rng.hpp"

namespace kinex {

struct DeltaAtom {
    double delta;
    double probability;
};

/// Conditional law of agent i's gain for fixed (x_i, x_j, lambda).
///
/// Every rule yields at most two atoms. Zero-probability atoms are dropped and
/// coincident atoms merged, so a pair that cannot exchange anything is exactly
/// {(0, 1)}.
class DeltaDistribution {
public:
    DeltaDistribution() = default;

    std::size_t size() const noexcept { return count_; }
    const DeltaAtom& operator[](std::size_t k) const { return atoms_[k]; }
    const DeltaAtom* begin() const noexcept { return atoms_.data(); }
    const DeltaAtom* end() const noexcept { return atoms_.data() + count_; }

    bool degenerate_zero() const noexcept { return count_ == 1 && atoms_[0].delta == 0.0; }

    // Builds from the raw two-point form; canonicalises -0 and merges.
    static DeltaDistribution two_point(DeltaAtom win, DeltaAtom lose);

private:
    std::array<DeltaAtom, 2> atoms_{};
    std::size_t count_ = 0;
};

/// Raw coin-level description of one exchange: agent i gains `win` with
/// probability `p_win` (epsilon = 1 / eta = +1), else gains `lose` (<= 0).
struct CoinLaw {
    double win;
    double lose;
    double p_win;
};

CoinLaw coin_law(const RuleSpec& rule, double x_i, double x_j, double lambda);

DeltaDistribution delta_distribution(const RuleSpec& rule, double x_i, double x_j,
                                     double lambda);

// Exact closed forms. ClassicLoser: lambda (x_j - x_i) / 2; unbiased rules: 0.
double expected_delta(const RuleSpec& rule, double x_i, double x_j, double lambda);
double expected_abs_delta(const RuleSpec& rule, double x_i, double x_j, double lambda);

struct DeltaSample {
    double delta;
    int coin;
    double lambda_used;
};

// Deterministic core of the sampler: u_coin picks the coin (win iff
// u_coin < p_win); lambda must already be resolved.
DeltaSample realize_delta(const RuleSpec& rule, double x_i, double x_j, double lambda,
                          double u_coin);

/// Draws one exchange. For a random-lambda rule the first uniform is lambda,
/// the second decides the coin; fixed-lambda rules consume one uniform.
template <UniformSource Source>
DeltaSample sample_delta(const RuleSpec& rule, double x_i, double x_j, Source& rng) {
    const double lambda = rule.random_lambda() ? static_cast<double>(rng.uniform()) : rule.lambda();
    return realize_delta(rule, x_i, x_j, lambda, static_cast<double>(rng.uniform()));
}

}  // namespace kinex
