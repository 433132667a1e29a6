#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kinex/format.hpp"
#include "kinex/master_eq.hpp"
#include "kinex/metrics.hpp"

namespace kinex {

namespace {

struct Moments {
    long double mass;
    long double moment;
};

Moments moments(std::span<const double> x, std::span<const double> m) {
    Moments mo{0.0L, 0.0L};
    for (std::size_t k = 0; k < x.size(); ++k) {
        mo.mass += m[k];
        mo.moment += static_cast<long double>(m[k]) * x[k];
    }
    return mo;
}

double relative(long double now, long double ref) {
    return static_cast<double>(std::abs(now - ref) / std::abs(ref));
}

bool targets_met(const IntegratorOptions& o, const StepRecord& rec) {
    if (!o.stop_gini_above && !o.stop_liquidity_below) return false;
    if (o.stop_gini_above && !(rec.gini >= *o.stop_gini_above)) return false;
    if (o.stop_liquidity_below && !(rec.liquidity <= *o.stop_liquidity_below)) return false;
    return true;
}

StepRecord observe(const WealthGrid& grid, const DiscreteKernel& kernel, double t, double dt,
                   const Moments& initial) {
    const Moments mo = moments(grid.points(), grid.masses());
    StepRecord rec;
    rec.t = t;
    rec.dt = dt;
    rec.mass_drift = relative(mo.mass, initial.mass);
    rec.mean_drift = relative(mo.moment, initial.moment);
    rec.gini = gini_grid(grid);
    rec.gini_rate = gini_rate(grid, kernel);
    const auto l = kernel_mobility(grid, kernel);
    const auto m = grid.masses();
    double liquid = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) liquid += l[k] * m[k];
    const double mean = grid.mean();
    rec.liquidity = liquid / (2.0 * mean);
    rec.max_mobility_ratio = *std::max_element(l.begin(), l.end()) / (2.0 * mean);
    return rec;
}

[[noreturn]] void abort_run(IntegrationReport& report, const std::string& why) {
    report.breached = true;
    report.breach = why;
    throw IntegrationAborted(why, report);
}

}  // namespace

IntegrationResult integrate(const WealthGrid& grid, const DiscreteKernel& kernel, double dt,
                            double t_end, const IntegratorOptions& options) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be >= 0");
    if (!(options.max_relative_decrease > 0.0)) {
        throw InvalidArgument("max_relative_decrease must be positive");
    }

    WealthGrid state = grid;
    const auto x = state.points();
    const Moments initial = moments(x, state.masses());
    IntegrationResult result{state, {}, {}};
    IntegrationReport& report = result.report;
    result.snapshots.push_back({0.0, std::vector<double>(state.masses().begin(), state.masses().end())});
    report.steps.push_back(observe(state, kernel, 0.0, 0.0, initial));

    double t = 0.0;
    std::size_t step = 0;
    Moments previous = initial;
    const double t_stop = t_end * (1.0 - 1e-14);
    while (t < t_stop) {
        const std::vector<double> rate = rhs(state, kernel);
        const auto m = state.masses();
        double h = std::min(dt, t_end - t);
        if (options.adaptive) {
            for (std::size_t k = 0; k < m.size(); ++k) {
                if (rate[k] < 0.0 && m[k] > 0.0) {
                    h = std::min(h, options.max_relative_decrease * m[k] / -rate[k]);
                }
            }
        }

        std::vector<double> next(m.size());
        for (;;) {
            bool negative = false;
            for (std::size_t k = 0; k < m.size(); ++k) {
                const double v = m[k] + h * rate[k];
                // Cancellation noise around an emptied node counts as zero.
                const double noise = 4.0 * std::numeric_limits<double>::epsilon() *
                                     (m[k] + h * std::abs(rate[k]));
                if (v < 0.0 && v < -noise) {
                    negative = true;
                    break;
                }
                next[k] = v < 0.0 ? 0.0 : v;
            }
            if (!negative) break;
            if (!options.adaptive) {
                StepRecord bad;
                bad.t = t + h;
                bad.dt = h;
                report.steps.push_back(bad);
                abort_run(report, "negative mass at step " + std::to_string(step + 1) +
                                      " with dt=" + format_g12(h));
            }
            h *= 0.5;
            ++report.halvings;
            if (h < options.min_dt) {
                abort_run(report, "dt fell below " + format_g12(options.min_dt) +
                                      " while keeping masses non-negative");
            }
        }

        state.assign_masses(std::move(next));
        t += h;
        ++step;

        const Moments now = moments(x, state.masses());
        const double step_mass = relative(now.mass, previous.mass);
        const double step_mean = relative(now.moment, previous.moment);
        StepRecord rec = observe(state, kernel, t, h, initial);
        report.steps.push_back(rec);
        if (step_mass > options.step_mass_tolerance) {
            abort_run(report, "mass drift " + format_g12(step_mass) + " at step " +
                                  std::to_string(step));
        }
        if (step_mean > options.step_mean_tolerance) {
            abort_run(report, "mean drift " + format_g12(step_mean) + " at step " +
                                  std::to_string(step));
        }
        if (rec.mass_drift > options.cumulative_tolerance ||
            rec.mean_drift > options.cumulative_tolerance) {
            abort_run(report, "cumulative drift beyond " +
                                  format_g12(options.cumulative_tolerance) + " at step " +
                                  std::to_string(step));
        }
        previous = now;
        if (options.snapshot_every > 0 && step % options.snapshot_every == 0) {
            result.snapshots.push_back(
                {t, std::vector<double>(state.masses().begin(), state.masses().end())});
        }
        if (targets_met(options, rec)) {
            report.reached_targets = true;
            break;
        }
    }
    if (result.snapshots.back().t != t) {
        result.snapshots.push_back({t, std::vector<double>(state.masses().begin(), state.masses().end())});
    }
    result.final_grid = std::move(state);
    return result;
}

}  // namespace kinex
