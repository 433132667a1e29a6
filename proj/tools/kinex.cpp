// kinex command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 invariant breach at run time.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kinex/error.hpp"
#include "kinex/format.hpp"
#include "kinex/io.hpp"
#include "kinex/master_eq.hpp"
#include "kinex/metrics.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBreach = 3;

struct SimFlags {
    std::string rule = "yardsale:lambda=0.5";
    std::size_t n = 1000;
    std::uint64_t sweeps = 1000;
    std::uint64_t seed = 0;
    std::uint64_t record_every = 1;
    std::string init = "equal";
    std::string out;
    std::uint64_t snapshot_every = 0;
    std::string snapshot_dir;
    std::optional<double> stop_gini_gap;
    std::optional<double> stop_liquidity;
    bool matching = false;
    std::size_t replicas = 0;
    std::size_t threads = 0;
};

struct IntegrateFlags {
    std::string rule = "yardsale:lambda=0.5";
    std::string grid = "log:1e-6:1e5:200";
    std::string init = "point:1";
    double dt = 1.0;
    double t_end = 100.0;
    std::string out;
    std::size_t every = 1;
    std::size_t snapshot_every = 0;
    std::string snapshot_out;
    bool fixed_dt = false;
    std::optional<double> stop_gini;
    std::optional<double> stop_liquidity;
};

struct SweepFlags {
    std::string param = "lambda";
    std::vector<std::string> values;
};

void add_sim_flags(CLI::App& app, SimFlags& f, bool ensemble) {
    app.add_option("--rule", f.rule, "exchange rule, e.g. yardsale:lambda=0.5")->capture_default_str();
    app.add_option("--n", f.n, "number of agents")->capture_default_str();
    app.add_option("--sweeps", f.sweeps, "maximum number of sweeps (N/2 exchanges each)")
        ->capture_default_str();
    app.add_option("--seed", f.seed, "master seed")->capture_default_str();
    app.add_option("--record-every", f.record_every, "sweeps between metric rows")
        ->capture_default_str();
    app.add_option("--init", f.init, "equal | uniform | file:<path>")->capture_default_str();
    app.add_option("--stop-gini-gap", f.stop_gini_gap, "stop once (N-1)/N - G falls below this");
    app.add_option("--stop-liquidity", f.stop_liquidity, "stop once liquidity falls below this");
    app.add_flag("--matching", f.matching, "pair agents by a random perfect matching each sweep");
    if (ensemble) {
        app.add_option("--replicas", f.replicas, "number of replicas")->required();
        app.add_option("--threads", f.threads, "worker threads (0: all, capped by KINEX_THREADS)");
    } else {
        app.add_option("--snapshot-every", f.snapshot_every, "write the population every k sweeps");
        app.add_option("--snapshot-dir", f.snapshot_dir, "directory for population snapshots");
    }
}

kinex::SimConfig to_sim_config(const SimFlags& f) {
    kinex::SimConfig c;
    c.n = f.n;
    c.rule = kinex::parse_rule_string(f.rule);
    c.initial = kinex::parse_initial_string(f.init);
    c.seed = f.seed;
    c.max_sweeps = f.sweeps;
    c.record_every = f.record_every;
    c.stop.gini_gap_below = f.stop_gini_gap;
    c.stop.liquidity_below = f.stop_liquidity;
    c.pairing = f.matching ? kinex::PairSelection::RandomMatching : kinex::PairSelection::RandomPairs;
    kinex::validate_config(c);
    return c;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw kinex::InvalidArgument("cannot write " + path);
    return os;
}

void finish(std::ofstream& os, const std::string& path, const kinex::ExperimentConfig& meta) {
    os.flush();
    if (!os) throw kinex::InvalidArgument("failed writing " + path);
    kinex::write_metadata_file(kinex::metadata_path(path), meta);
}

int cmd_simulate(const SimFlags& f) {
    const kinex::SimConfig c = to_sim_config(f);
    if ((f.snapshot_every > 0) != !f.snapshot_dir.empty()) {
        throw kinex::InvalidArgument("--snapshot-every and --snapshot-dir go together");
    }
    auto os = open_output(f.out);
    kinex::RunHooks hooks;
    if (f.snapshot_every > 0) {
        std::filesystem::create_directories(f.snapshot_dir);
        hooks.snapshot_every = f.snapshot_every;
        hooks.on_snapshot = [&](const kinex::Population& pop, std::uint64_t sweep) {
            const auto path = std::filesystem::path(f.snapshot_dir) /
                              ("population_" + std::to_string(sweep) + ".txt");
            std::ofstream snap(path, std::ios::binary);
            if (!snap) throw kinex::InvalidArgument("cannot write " + path.string());
            kinex::write_population_snapshot(snap, pop, sweep);
        };
    }
    const kinex::Trajectory traj = kinex::run(c, 0, hooks);
    kinex::write_metrics_csv(os, traj.records);
    finish(os, f.out, {kinex::Command::Simulate, c, 0, f.out});
    const auto& last = traj.records.back();
    std::cout << "sweeps=" << traj.sweeps_run << " stop="
              << (traj.stop_reason == kinex::StopReason::Condensed ? "condensed" : "max-sweeps")
              << " gini=" << kinex::format_g12(last.gini)
              << " liquidity=" << kinex::format_g12(last.liquidity) << '\n';
    return 0;
}

int cmd_ensemble(const SimFlags& f) {
    const kinex::SimConfig c = to_sim_config(f);
    auto os = open_output(f.out);
    const kinex::EnsembleSummary s = kinex::run_ensemble(c, f.replicas, f.threads);
    kinex::write_ensemble_csv(os, s);
    finish(os, f.out, {kinex::Command::Ensemble, c, f.replicas, f.out});
    std::cout << "replicas=" << s.replicas << " gini_mean=" << kinex::format_g12(s.gini_mean.back())
              << " liquidity_mean=" << kinex::format_g12(s.liquidity_mean.back()) << '\n';
    return 0;
}

int cmd_integrate(const IntegrateFlags& f) {
    kinex::IntegrateSettings s;
    s.rule = kinex::parse_rule_string(f.rule);
    s.grid = kinex::parse_grid_string(f.grid);
    s.initial = kinex::parse_density_string(f.init);
    s.dt = f.dt;
    s.t_end = f.t_end;
    s.options.adaptive = !f.fixed_dt;
    s.options.snapshot_every = f.snapshot_every;
    s.options.stop_gini_above = f.stop_gini;
    s.options.stop_liquidity_below = f.stop_liquidity;
    if (f.snapshot_every > 0 && f.snapshot_out.empty()) {
        throw kinex::InvalidArgument("--snapshot-every needs --snapshot-out");
    }

    const kinex::WealthGrid grid = kinex::build_grid(s.grid, s.initial);
    const kinex::DiscreteKernel kernel = kinex::build_kernel(s.rule, grid);
    auto os = open_output(f.out);
    const kinex::ExperimentConfig meta{kinex::Command::Integrate, s, 0, f.out};
    try {
        const kinex::IntegrationResult r = kinex::integrate(grid, kernel, s.dt, s.t_end, s.options);
        kinex::write_integration_csv(os, r.report, f.every);
        finish(os, f.out, meta);
        if (!f.snapshot_out.empty()) {
            auto snap = open_output(f.snapshot_out);
            kinex::write_grid_snapshots_csv(snap, grid, r.snapshots);
            finish(snap, f.snapshot_out, meta);
        }
        const auto& last = r.report.steps.back();
        std::cout << "t=" << kinex::format_g12(last.t) << " gini=" << kinex::format_g12(last.gini)
                  << " liquidity=" << kinex::format_g12(last.liquidity)
                  << " halvings=" << r.report.halvings << '\n';
    } catch (const kinex::IntegrationAborted& e) {
        // Keep the steps up to the breach so the failure can be inspected.
        kinex::write_integration_csv(os, e.report(), 1);
        finish(os, f.out, meta);
        throw;
    }
    return 0;
}

int cmd_kernel_check(const std::string& rule_text, const std::string& grid_text) {
    const kinex::RuleSpec rule = kinex::parse_rule_string(rule_text);
    const kinex::GridSpec spec = kinex::parse_grid_string(grid_text);
    const kinex::WealthGrid grid = kinex::build_grid(spec, kinex::PointDensity{1.0});
    const kinex::DiscreteKernel kernel = kinex::build_kernel(rule, grid);
    const kinex::KernelCheck c = kinex::check_kernel(kernel);
    std::cout << "rule=" << kinex::format_rule_string(rule) << '\n'
              << "grid=" << kinex::format_grid_string(spec) << '\n'
              << "pairs=" << kernel.pairs.size() << '\n'
              << "max_normalization_error=" << kinex::format_g12(c.max_normalization_error) << '\n'
              << "max_bias=" << kinex::format_g12(c.max_bias) << '\n'
              << "max_relative_bias=" << kinex::format_g12(c.max_relative_bias) << '\n'
              << "truncated_pairs=" << c.truncated_pairs << '\n'
              << "zero_rows_identity=" << (c.zero_rows_identity ? "yes" : "no") << '\n'
              << "status=" << (c.passed() ? "ok" : "failed") << '\n';
    return c.passed() ? 0 : kExitBreach;
}

int cmd_sweep(const SimFlags& f, const SweepFlags& sf) {
    kinex::SweepSpec spec;
    spec.parameter = kinex::parse_sweep_parameter(sf.param);
    spec.values = sf.values;
    spec.replicas = f.replicas == 0 ? 1 : f.replicas;
    if (spec.values.empty()) throw kinex::InvalidArgument("--values needs at least one entry");
    SimFlags base = f;
    spec.base = to_sim_config(base);
    auto os = open_output(f.out);
    const auto rows = kinex::run_sweep(spec);
    kinex::write_sweep_csv(os, rows);
    finish(os, f.out, {kinex::Command::Sweep, spec.base, spec.replicas, f.out});
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            ++failed;
            std::cerr << "value " << r.value << ": " << r.error << '\n';
        }
    }
    std::cout << "rows=" << rows.size() << " failed=" << failed << '\n';
    return 0;
}

int cmd_gini(const std::string& path) {
    const auto snap = kinex::read_population_snapshot_file(path);
    std::cout << kinex::format_g12(kinex::gini_population(snap.population)) << '\n';
    return 0;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Expands `--config <file>` into the flags it lists. Keys already given on
// the command line are skipped so the command line wins.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
    std::string path;
    std::vector<std::string> kept;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) {
            path = args[++k];
        } else if (args[k].rfind("--config=", 0) == 0) {
            path = args[k].substr(9);
        } else {
            kept.push_back(args[k]);
        }
    }
    if (path.empty()) return kept;

    auto given = [&](const std::string& flag) {
        for (const auto& a : kept) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        }
        return false;
    };
    std::ifstream in(path);
    if (!in) throw kinex::InvalidArgument("cannot read config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw kinex::InvalidArgument(path + ":" + std::to_string(line_no) +
                                         ": expected key=value");
        }
        std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value == "true") {
            kept.push_back(flag);
        } else if (value != "false") {
            kept.push_back(flag);
            kept.push_back(value);
        }
    }
    return kept;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinex: kinetic wealth-exchange simulator and master-equation solver"};
    app.set_version_flag("--version", std::string(KINEX_VERSION));
    app.require_subcommand(1);

    SimFlags sim, ens, sweep_sim;
    IntegrateFlags integ;
    SweepFlags sweep;
    std::string kc_rule = "yardsale:lambda=0.5", kc_grid = "log:1e-6:1e5:200", gini_path;

    auto* simulate = app.add_subcommand("simulate", "run one agent-based simulation");
    add_sim_flags(*simulate, sim, false);
    simulate->add_option("--out", sim.out, "metrics CSV")->required();

    auto* ensemble = app.add_subcommand("ensemble", "run independent replicas and aggregate");
    add_sim_flags(*ensemble, ens, true);
    ensemble->add_option("--out", ens.out, "ensemble CSV")->required();

    auto* integrate = app.add_subcommand("integrate", "integrate the master equation on a grid");
    integrate->add_option("--rule", integ.rule, "exchange rule")->capture_default_str();
    integrate->add_option("--grid", integ.grid, "linear:<xmax>:<cells> | log:<xmin>:<xmax>:<cells>")
        ->capture_default_str();
    integrate->add_option("--init", integ.init, "point:<x> | uniform:<a>:<b> | exp:<mean>")
        ->capture_default_str();
    integrate->add_option("--dt", integ.dt, "largest time step")->capture_default_str();
    integrate->add_option("--t-end", integ.t_end, "final time")->capture_default_str();
    integrate->add_option("--out", integ.out, "per-step CSV")->required();
    integrate->add_option("--every", integ.every, "write every k-th step")->capture_default_str();
    integrate->add_option("--snapshot-every", integ.snapshot_every, "store the grid every k steps");
    integrate->add_option("--snapshot-out", integ.snapshot_out, "grid snapshot CSV");
    integrate->add_flag("--fixed-dt", integ.fixed_dt,
                        "never shrink dt; abort if a mass would go negative");
    integrate->add_option("--stop-gini", integ.stop_gini, "stop once G reaches this");
    integrate->add_option("--stop-liquidity", integ.stop_liquidity, "stop once L falls to this");

    auto* kernel_check = app.add_subcommand("kernel-check", "verify a discretised kernel");
    kernel_check->add_option("--rule", kc_rule, "exchange rule")->capture_default_str();
    kernel_check->add_option("--grid", kc_grid, "grid spec")->capture_default_str();

    auto* sweep_cmd = app.add_subcommand("sweep", "repeat a simulation over a parameter list");
    add_sim_flags(*sweep_cmd, sweep_sim, false);
    sweep_cmd->add_option("--replicas", sweep_sim.replicas, "replicas per value (1: single run)");
    sweep_cmd->add_option("--param", sweep.param, "lambda | N | rule")->capture_default_str();
    sweep_cmd->add_option("--values", sweep.values, "comma-separated values")
        ->delimiter(',')
        ->required();
    sweep_cmd->add_option("--out", sweep_sim.out, "summary CSV")->required();

    auto* gini = app.add_subcommand("gini", "Gini index of a population snapshot file");
    gini->add_option("file", gini_path, "population snapshot")->required();

    for (auto* sub : {simulate, ensemble, integrate, kernel_check, sweep_cmd}) {
        sub->add_option("--config", "key=value file mirroring the flags; flags win");
    }

    std::vector<std::string> args;
    try {
        args = merge_config_file(std::vector<std::string>(argv, argv + argc));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*ensemble) return cmd_ensemble(ens);
        if (*integrate) return cmd_integrate(integ);
        if (*kernel_check) return cmd_kernel_check(kc_rule, kc_grid);
        if (*sweep_cmd) return cmd_sweep(sweep_sim, sweep);
        if (*gini) return cmd_gini(gini_path);
    } catch (const kinex::InvariantBreach& e) {
        std::cerr << "invariant breach: " << e.what() << '\n';
        return kExitBreach;
    } catch (const kinex::ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return kExitBreach;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
