#include "kinex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kinex/error.hpp"
#include "kinex/format.hpp"
#include "kinex/rules.hpp"

namespace kinex {

namespace {

constexpr double kGridMassTolerance = 1e-8;

void check_normalized(const WealthGrid& grid) {
    const double mass = grid.total_mass();
    if (std::abs(mass - 1.0) > kGridMassTolerance) {
        throw InvalidArgument("grid is not normalized (mass " + format_exact(mass) + ")");
    }
}

}  // namespace

double gini_population(std::span<const double> wealth) {
    const std::size_t n = wealth.size();
    if (n < 2) throw InvalidArgument("gini needs at least two agents");
    std::vector<double> sorted(wealth.begin(), wealth.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0.0) throw InvalidArgument("gini of negative wealth is undefined");
    long double prefix = 0.0L;
    long double pair_sum = 0.0L;  // sum over i < j of (x_j - x_i)
    for (std::size_t i = 0; i < n; ++i) {
        const long double x = sorted[i];
        pair_sum += static_cast<long double>(i) * x - prefix;
        prefix += x;
    }
    if (!(prefix > 0.0L)) throw DegenerateInput("degenerate: zero total wealth");
    return static_cast<double>(pair_sum / (static_cast<long double>(n) * prefix));
}

double gini_population(const Population& pop) { return gini_population(pop.wealth()); }

double gini_grid(const WealthGrid& grid) {
    check_normalized(grid);
    const auto x = grid.points();
    const auto m = grid.masses();
    long double mass_below = 0.0L;
    long double moment_below = 0.0L;
    long double pair_sum = 0.0L;  // sum over a > b of m_a m_b (x_a - x_b)
    for (std::size_t a = 0; a < x.size(); ++a) {
        pair_sum += static_cast<long double>(m[a]) * (x[a] * mass_below - moment_below);
        mass_below += m[a];
        moment_below += static_cast<long double>(m[a]) * x[a];
    }
    if (!(moment_below > 0.0L)) throw DegenerateInput("degenerate: zero total wealth");
    // Normalised by the actual mass so that G is scale free in m.
    return static_cast<double>(pair_sum / (moment_below * mass_below));
}

std::vector<double> mobility_profile(const WealthGrid& grid, const RuleSpec& rule) {
    check_normalized(grid);
    const auto x = grid.points();
    const auto m = grid.masses();
    const double lambda = rule.lambda();
    std::vector<double> l(x.size(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        double acc = 0.0;
        for (std::size_t kp = 0; kp < x.size(); ++kp) {
            if (m[kp] == 0.0) continue;
            acc += m[kp] * expected_abs_delta(rule, x[k], x[kp], lambda);
        }
        l[k] = acc;
    }
    return l;
}

double liquidity_grid(const WealthGrid& grid, const RuleSpec& rule) {
    const auto l = mobility_profile(grid, rule);
    const auto m = grid.masses();
    double acc = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) acc += l[k] * m[k];
    const double mean = grid.mean();
    if (!(mean > 0.0)) throw DegenerateInput("degenerate: zero total wealth");
    return acc / (2.0 * mean);
}

std::size_t exchanges_per_sweep(std::size_t n) { return std::max<std::size_t>(1, n / 2); }

double liquidity_empirical(std::span<const double> sweep_abs_deltas, const Population& pop) {
    if (sweep_abs_deltas.empty()) throw InvalidArgument("liquidity needs a non-empty sweep");
    double sum = 0.0;
    for (double d : sweep_abs_deltas) sum += std::abs(d);
    return liquidity_empirical(sum, pop);
}

double liquidity_empirical(double sum_abs_delta, const Population& pop) {
    if (!(pop.total() > 0.0)) throw DegenerateInput("degenerate: zero total wealth");
    return sum_abs_delta / pop.total();
}

namespace {

struct PopulationSummary {
    double gini;
    CondensationReport condensation;
};

PopulationSummary summarize_population(const Population& pop, double eps_zero) {
    const auto w = pop.wealth();
    const auto n = static_cast<double>(w.size());
    const double threshold = eps_zero * pop.mean();
    const auto zeros = std::count_if(w.begin(), w.end(), [&](double x) { return x < threshold; });
    const double top = *std::max_element(w.begin(), w.end());
    PopulationSummary s;
    s.gini = gini_population(w);
    s.condensation.gini_gap = (n - 1.0) / n - s.gini;
    s.condensation.zero_fraction = static_cast<double>(zeros) / n;
    s.condensation.top_share = top / pop.total();
    return s;
}

}  // namespace

CondensationReport condensation_report(const Population& pop, double eps_zero) {
    return summarize_population(pop, eps_zero).condensation;
}

MetricsRecord make_record(double t, const Population& pop, double liquidity, double eps_zero) {
    const PopulationSummary s = summarize_population(pop, eps_zero);
    MetricsRecord rec;
    rec.t = t;
    rec.gini = s.gini;
    rec.liquidity = liquidity;
    rec.mean_wealth = pop.mean();
    rec.top_share = s.condensation.top_share;
    rec.zero_fraction = s.condensation.zero_fraction;
    rec.gini_gap = s.condensation.gini_gap;
    return rec;
}

}  // namespace kinex
