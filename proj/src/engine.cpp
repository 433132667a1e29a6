#include "kinex/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "kinex/error.hpp"

namespace kinex {

bool StopCriteria::met(const MetricsRecord& rec) const {
    if (!active()) return false;
    if (gini_gap_below && !(rec.gini_gap < *gini_gap_below)) return false;
    if (liquidity_below && !(rec.liquidity < *liquidity_below)) return false;
    return true;
}

void validate_config(const SimConfig& config) {
    if (config.n < 2) throw InvalidArgument("N must be at least 2");
    if (config.max_sweeps < 1) throw InvalidArgument("max_sweeps must be at least 1");
    if (config.record_every < 1) throw InvalidArgument("record_every must be at least 1");
    if (config.stop.gini_gap_below && !(*config.stop.gini_gap_below >= 0.0)) {
        throw InvalidArgument("gini-gap threshold must be >= 0");
    }
    if (config.stop.liquidity_below && !(*config.stop.liquidity_below >= 0.0)) {
        throw InvalidArgument("liquidity threshold must be >= 0");
    }
    if (!(config.eps_zero >= 0.0)) throw InvalidArgument("eps_zero must be >= 0");
    if (config.pairing == PairSelection::RandomMatching && config.n % 2 != 0) {
        throw InvalidArgument("random matching needs an even N");
    }
    if (const auto* given = std::get_if<GivenInitial>(&config.initial)) {
        if (given->population.size() != config.n) {
            throw InvalidArgument("initial population size does not match N");
        }
    }
}

Population make_initial_population(const SimConfig& config, RngStream& rng) {
    Population pop = std::visit(
        [&](const auto& init) -> Population {
            using T = std::decay_t<decltype(init)>;
            if constexpr (std::is_same_v<T, EqualInitial>) {
                return Population::equal(config.n, 1.0);
            } else if constexpr (std::is_same_v<T, UniformInitial>) {
                std::vector<double> w(config.n);
                for (double& x : w) x = 2.0 * rng.uniform();
                const double sum = std::accumulate(w.begin(), w.end(), 0.0);
                if (!(sum > 0.0)) throw InvalidArgument("uniform initial drew zero total wealth");
                const double scale = static_cast<double>(config.n) / sum;
                for (double& x : w) x *= scale;
                return Population(std::move(w));
            } else if constexpr (std::is_same_v<T, FileInitial>) {
                auto pop = read_population_snapshot_file(init.path).population;
                if (pop.size() != config.n) {
                    throw InvalidArgument("population file holds " + std::to_string(pop.size()) +
                                          " agents, expected N=" + std::to_string(config.n));
                }
                return pop;
            } else {
                return init.population;
            }
        },
        config.initial);
    if (!(pop.total() > 0.0)) throw InvalidArgument("initial population has zero total wealth");
    if (!validate_population(pop).valid()) throw InvalidArgument("initial population is invalid");
    return pop;
}

namespace {

// Sum of |delta| over one sweep.
double run_sweep(Population& pop, const SimConfig& config, RngStream& rng,
                 std::vector<std::size_t>& perm) {
    double moved = 0.0;
    if (config.pairing == PairSelection::RandomPairs) {
        const std::size_t exchanges = exchanges_per_sweep(pop.size());
        for (std::size_t e = 0; e < exchanges; ++e) {
            moved += std::abs(step(pop, config.rule, rng).delta);
        }
        return moved;
    }
    // Fisher-Yates with our own bounded draws, so the shuffle is reproducible.
    for (std::size_t k = perm.size(); k > 1; --k) {
        std::swap(perm[k - 1], perm[static_cast<std::size_t>(rng.below(k))]);
    }
    for (std::size_t k = 0; k + 1 < perm.size(); k += 2) {
        moved += std::abs(exchange(pop, config.rule, perm[k], perm[k + 1], rng).delta);
    }
    return moved;
}

Trajectory run_impl(const SimConfig& config, std::uint64_t stream_id, const RunHooks& hooks,
                    bool honour_stop) {
    validate_config(config);
    RngStream rng(config.seed, stream_id);
    Population pop = make_initial_population(config, rng);
    std::vector<std::size_t> perm(pop.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});

    Trajectory traj{{}, pop, StopReason::MaxSweeps, 0};
    if (hooks.on_snapshot && hooks.snapshot_every > 0) hooks.on_snapshot(pop, 0);
    for (std::uint64_t sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        const double moved = run_sweep(pop, config, rng, perm);
        traj.sweeps_run = sweep;
        if (hooks.on_snapshot && hooks.snapshot_every > 0 && sweep % hooks.snapshot_every == 0) {
            hooks.on_snapshot(pop, sweep);
        }
        if (sweep % config.record_every != 0 && sweep != config.max_sweeps) continue;
        const MetricsRecord rec = make_record(static_cast<double>(sweep), pop,
                                              liquidity_empirical(moved, pop), config.eps_zero);
        traj.records.push_back(rec);
        if (honour_stop && config.stop.met(rec)) {
            traj.stop_reason = StopReason::Condensed;
            break;
        }
    }
    traj.final_population = std::move(pop);
    return traj;
}

}  // namespace

Trajectory run(const SimConfig& config, std::uint64_t stream_id, const RunHooks& hooks) {
    return run_impl(config, stream_id, hooks, true);
}

std::size_t worker_threads(std::size_t requested) {
    std::size_t n = requested;
    if (n == 0) {
        n = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("KINEX_THREADS")) {
            char* end = nullptr;
            const unsigned long cap = std::strtoul(env, &end, 10);
            if (end != env && cap > 0) n = std::min<std::size_t>(n, cap);
        }
    }
    return n;
}

std::vector<Trajectory> run_replicas(const SimConfig& config, std::size_t replicas,
                                     std::size_t threads) {
    if (replicas < 2) throw InvalidArgument("an ensemble needs at least 2 replicas");
    validate_config(config);
    std::vector<std::optional<Trajectory>> slots(replicas);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t r = next++; r < replicas; r = next++) {
            try {
                slots[r] = run_impl(config, r, {}, false);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::min(worker_threads(threads), replicas);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<Trajectory> out;
    out.reserve(replicas);
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

EnsembleSummary summarize(const std::vector<Trajectory>& replicas) {
    if (replicas.size() < 2) throw InvalidArgument("an ensemble needs at least 2 replicas");
    const std::size_t steps = replicas.front().records.size();
    for (const auto& traj : replicas) {
        if (traj.records.size() != steps) throw InvalidArgument("replica time axes differ");
    }
    EnsembleSummary s;
    s.replicas = replicas.size();
    const auto r = static_cast<double>(replicas.size());
    for (std::size_t k = 0; k < steps; ++k) {
        double g = 0.0, g2 = 0.0, l = 0.0, l2 = 0.0, gap = 0.0;
        for (const auto& traj : replicas) {
            const MetricsRecord& rec = traj.records[k];
            if (rec.t != replicas.front().records[k].t) {
                throw InvalidArgument("replica time axes differ");
            }
            g += rec.gini;
            l += rec.liquidity;
            gap += rec.gini_gap;
        }
        g /= r;
        l /= r;
        for (const auto& traj : replicas) {
            const MetricsRecord& rec = traj.records[k];
            g2 += (rec.gini - g) * (rec.gini - g);
            l2 += (rec.liquidity - l) * (rec.liquidity - l);
        }
        s.t.push_back(replicas.front().records[k].t);
        s.gini_mean.push_back(g);
        s.gini_std.push_back(std::sqrt(g2 / (r - 1.0)));
        s.liquidity_mean.push_back(l);
        s.liquidity_std.push_back(std::sqrt(l2 / (r - 1.0)));
        s.gini_gap_mean.push_back(gap / r);
    }
    return s;
}

EnsembleSummary run_ensemble(const SimConfig& config, std::size_t replicas, std::size_t threads) {
    return summarize(run_replicas(config, replicas, threads));
}

}  // namespace kinex
