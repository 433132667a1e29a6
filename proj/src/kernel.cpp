#include <algorithm>
#include <cmath>
#include <string>

#include "kinex/format.hpp"
#include "kinex/log.hpp"
#include "kinex/master_eq.hpp"
#include "kinex/metrics.hpp"
#include "kinex/rules.hpp"

namespace kinex {

namespace {

constexpr double kNormalizationTolerance = 1e-12;
constexpr double kBiasTolerance = 1e-10;

void add_entry(std::vector<KernelEntry>& list, std::size_t begin, std::size_t cell, double w) {
    if (w == 0.0) return;
    for (std::size_t e = begin; e < list.size(); ++e) {
        if (list[e].cell == cell) {
            list[e].weight += w;
            return;
        }
    }
    list.push_back({static_cast<std::uint32_t>(cell), w});
}

void append_atoms(const RuleSpec& rule, double x, double xp, std::vector<KernelAtom>& atoms) {
    if (rule.random_lambda()) {
        // Equal-weight midpoint nodes; their mean is exactly 1/2.
        const double q = static_cast<double>(kLambdaNodes);
        for (std::size_t n = 0; n < kLambdaNodes; ++n) {
            const double lambda = (static_cast<double>(n) + 0.5) / q;
            for (const auto& a : delta_distribution(rule, x, xp, lambda)) {
                atoms.push_back({a.delta, a.probability / q});
            }
        }
        return;
    }
    for (const auto& a : delta_distribution(rule, x, xp, rule.lambda())) {
        atoms.push_back({a.delta, a.probability});
    }
}

// Convex piecewise-linear phi(x_a) = sum_b m_b |x_a - x_b| at every node.
std::vector<double> abs_moment(std::span<const double> x, std::span<const double> m) {
    const std::size_t n = x.size();
    long double mass_total = 0.0L, moment_total = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
        mass_total += m[k];
        moment_total += static_cast<long double>(m[k]) * x[k];
    }
    std::vector<double> phi(n);
    long double mass_below = 0.0L, moment_below = 0.0L;
    for (std::size_t a = 0; a < n; ++a) {
        const long double xa = x[a];
        const long double mass_above = mass_total - mass_below - m[a];
        const long double moment_above = moment_total - moment_below - static_cast<long double>(m[a]) * xa;
        phi[a] = static_cast<double>(xa * mass_below - moment_below + moment_above - xa * mass_above);
        mass_below += m[a];
        moment_below += static_cast<long double>(m[a]) * xa;
    }
    return phi;
}

void require_matching(const WealthGrid& grid, const DiscreteKernel& kernel) {
    if (grid.size() != kernel.cells() ||
        !std::equal(kernel.points.begin(), kernel.points.end(), grid.points().begin())) {
        throw InvalidArgument("kernel was built for a different grid");
    }
}

}  // namespace

std::size_t DiscreteKernel::pair_index(std::size_t k, std::size_t kp) const {
    if (k > kp) std::swap(k, kp);
    const std::size_t n = points.size();
    return k * n - k * (k - 1) / 2 + (kp - k);
}

DiscreteKernel build_kernel(const RuleSpec& rule, const WealthGrid& grid) {
    DiscreteKernel kernel;
    kernel.rule = rule;
    kernel.points.assign(grid.points().begin(), grid.points().end());
    const auto& x = kernel.points;
    const std::size_t n = x.size();
    kernel.pairs.reserve(n * (n + 1) / 2);

    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t kp = k; kp < n; ++kp) {
            KernelPair pair{};
            pair.k = static_cast<std::uint32_t>(k);
            pair.kp = static_cast<std::uint32_t>(kp);
            pair.atom_begin = static_cast<std::uint32_t>(kernel.atoms.size());
            append_atoms(rule, x[k], x[kp], kernel.atoms);
            pair.atom_end = static_cast<std::uint32_t>(kernel.atoms.size());

            pair.identity = std::all_of(kernel.atoms.begin() + pair.atom_begin,
                                        kernel.atoms.end(),
                                        [](const KernelAtom& a) { return a.delta == 0.0; });
            double excess = 0.0;
            pair.first_begin = static_cast<std::uint32_t>(kernel.entries.size());
            for (std::uint32_t a = pair.atom_begin; a < pair.atom_end; ++a) {
                const auto [delta, p] = kernel.atoms[a];
                const NodeSplit s = grid.split(x[k] + delta);
                add_entry(kernel.entries, pair.first_begin, s.lo, p * s.w_lo);
                add_entry(kernel.entries, pair.first_begin, s.hi, p * s.w_hi);
                excess += p * s.excess;
            }
            pair.first_end = static_cast<std::uint32_t>(kernel.entries.size());
            pair.second_begin = pair.first_end;
            for (std::uint32_t a = pair.atom_begin; a < pair.atom_end; ++a) {
                const auto [delta, p] = kernel.atoms[a];
                const NodeSplit s = grid.split(x[kp] - delta);
                add_entry(kernel.entries, pair.second_begin, s.lo, p * s.w_lo);
                add_entry(kernel.entries, pair.second_begin, s.hi, p * s.w_hi);
                excess += p * s.excess;
            }
            pair.second_end = static_cast<std::uint32_t>(kernel.entries.size());
            pair.truncated_wealth = excess;
            if (excess > 0.0) {
                ++kernel.truncated_pairs;
                kernel.max_relative_truncation =
                    std::max(kernel.max_relative_truncation, excess / (x[k] + x[kp]));
            }
            kernel.pairs.push_back(pair);
        }
    }
    if (kernel.truncated_pairs > 0) {
        warn("kernel truncates post-exchange wealth above x_max on " +
             std::to_string(kernel.truncated_pairs) + " node pairs (max relative " +
             format_g12(kernel.max_relative_truncation) + ")");
    }
    return kernel;
}

KernelCheck check_kernel(const DiscreteKernel& kernel) {
    KernelCheck c;
    const auto& x = kernel.points;
    for (std::size_t idx = 0; idx < kernel.pairs.size(); ++idx) {
        const KernelPair& p = kernel.pairs[idx];
        double atoms = 0.0;
        for (auto a = p.atom_begin; a < p.atom_end; ++a) atoms += kernel.atoms[a].probability;
        double w1 = 0.0, w2 = 0.0, mean1 = 0.0;
        for (auto e = p.first_begin; e < p.first_end; ++e) {
            w1 += kernel.entries[e].weight;
            mean1 += kernel.entries[e].weight * x[kernel.entries[e].cell];
        }
        for (auto e = p.second_begin; e < p.second_end; ++e) w2 += kernel.entries[e].weight;
        const double norm_err =
            std::max({std::abs(atoms - 1.0), std::abs(w1 - 1.0), std::abs(w2 - 1.0)});
        c.max_normalization_error = std::max(c.max_normalization_error, norm_err);

        if (p.truncated_wealth > 0.0) {
            ++c.truncated_pairs;
            continue;
        }
        const double scale = x[p.k] + x[p.kp];
        const double bias = std::abs(mean1 - x[p.k]);
        if (bias > c.max_bias) c.max_bias = bias;
        if (scale > 0.0 && bias / scale > c.max_relative_bias) {
            c.max_relative_bias = bias / scale;
            c.worst_bias_pair = idx;
        }
        if (p.k == 0 && kernel.rule.unbiased()) {
            const bool stays = p.first_end - p.first_begin == 1 &&
                               kernel.entries[p.first_begin].cell == p.k &&
                               p.second_end - p.second_begin == 1 &&
                               kernel.entries[p.second_begin].cell == p.kp;
            if (!stays) c.zero_rows_identity = false;
        }
    }
    c.normalized = c.max_normalization_error <= kNormalizationTolerance;
    c.unbiased = c.max_relative_bias <= kBiasTolerance;
    return c;
}

std::vector<double> rhs(const WealthGrid& grid, const DiscreteKernel& kernel) {
    require_matching(grid, kernel);
    const auto m = grid.masses();
    std::vector<double> out(m.size(), 0.0);
    for (const KernelPair& p : kernel.pairs) {
        if (p.identity) continue;
        double rate = m[p.k] * m[p.kp];
        if (rate == 0.0) continue;
        if (p.k == p.kp) rate *= 0.5;
        for (auto e = p.first_begin; e < p.second_end; ++e) {
            out[kernel.entries[e].cell] += rate * kernel.entries[e].weight;
        }
        out[p.k] -= rate;
        out[p.kp] -= rate;
    }
    return out;
}

double gini_rate(const WealthGrid& grid, const DiscreteKernel& kernel) {
    require_matching(grid, kernel);
    const auto x = grid.points();
    const auto m = grid.masses();
    const std::vector<double> phi = abs_moment(x, m);
    long double acc = 0.0L;
    for (const KernelPair& p : kernel.pairs) {
        if (p.identity) continue;
        const double rate = m[p.k] * m[p.kp];
        if (rate == 0.0) continue;
        double first = -phi[p.k];
        for (auto e = p.first_begin; e < p.first_end; ++e) {
            first += kernel.entries[e].weight * phi[kernel.entries[e].cell];
        }
        double bracket = first;
        if (p.k != p.kp) {
            // Ordered pair (kp, k): agent 1 at kp goes where this pair's agent 2 goes.
            double second = -phi[p.kp];
            for (auto e = p.second_begin; e < p.second_end; ++e) {
                second += kernel.entries[e].weight * phi[kernel.entries[e].cell];
            }
            bracket += second;
        }
        acc += static_cast<long double>(rate) * bracket;
    }
    const double mean = grid.mean();
    if (!(mean > 0.0)) throw DegenerateInput("degenerate: zero total wealth");
    return static_cast<double>(acc) / mean;
}

std::vector<double> kernel_mobility(const WealthGrid& grid, const DiscreteKernel& kernel) {
    require_matching(grid, kernel);
    const auto m = grid.masses();
    std::vector<double> l(m.size(), 0.0);
    for (const KernelPair& p : kernel.pairs) {
        if (p.identity) continue;
        double abs_delta = 0.0;
        for (auto a = p.atom_begin; a < p.atom_end; ++a) {
            abs_delta += kernel.atoms[a].probability * std::abs(kernel.atoms[a].delta);
        }
        l[p.k] += m[p.kp] * abs_delta;
        if (p.k != p.kp) l[p.kp] += m[p.k] * abs_delta;
    }
    return l;
}

double kernel_liquidity(const WealthGrid& grid, const DiscreteKernel& kernel) {
    const auto l = kernel_mobility(grid, kernel);
    const auto m = grid.masses();
    double acc = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) acc += l[k] * m[k];
    return acc / (2.0 * grid.mean());
}

double mobility_bound_check(const WealthGrid& grid, const DiscreteKernel& kernel) {
    const auto l = kernel_mobility(grid, kernel);
    return *std::max_element(l.begin(), l.end()) / (2.0 * grid.mean());
}

}  // namespace kinex
