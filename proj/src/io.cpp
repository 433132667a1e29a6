#include <fstream>
#include <ostream>

#include "kinex/error.hpp"
#include "kinex/format.hpp"
#include "kinex/io.hpp"
#include "kinex/metrics.hpp"

namespace kinex {

namespace {

constexpr const char* kSweepConvention = "sweep=N/2 exchanges";
constexpr const char* kRateConvention = "unit interaction rate per agent per unit time";

std::string lambda_law(const RuleSpec& rule) {
    if (!rule.has_lambda()) return "none";
    if (rule.random_lambda()) return "lambda=uniform[0,1]";
    return "lambda=" + format_exact(rule.lambda());
}

std::string optional_text(const std::optional<double>& v) {
    return v ? format_exact(*v) : std::string("none");
}

void sim_block(nlohmann::ordered_json& j, const SimConfig& c) {
    j["rule"] = format_rule_string(c.rule);
    j["lambda_law"] = lambda_law(c.rule);
    j["n"] = c.n;
    j["seed"] = c.seed;
    j["sweeps"] = c.max_sweeps;
    j["record_every"] = c.record_every;
    j["init"] = format_initial_string(c.initial);
    j["pair_selection"] = c.pairing == PairSelection::RandomPairs
                              ? "uniform ordered pair i!=j per exchange"
                              : "random perfect matching per sweep";
    j["stop_gini_gap"] = optional_text(c.stop.gini_gap_below);
    j["stop_liquidity"] = optional_text(c.stop.liquidity_below);
    j["eps_zero"] = format_exact(c.eps_zero);
    j["time_convention"] = kSweepConvention;
    j["liquidity_estimator"] = "sum |delta| over one sweep / total wealth";
}

void integrate_block(nlohmann::ordered_json& j, const IntegrateSettings& s) {
    j["rule"] = format_rule_string(s.rule);
    j["lambda_law"] = lambda_law(s.rule);
    if (s.rule.random_lambda()) j["lambda_quadrature"] = std::to_string(kLambdaNodes) + " midpoint nodes";
    j["grid"] = format_grid_string(s.grid);
    j["init"] = format_density_string(s.initial);
    j["dt"] = format_exact(s.dt);
    j["t_end"] = format_exact(s.t_end);
    j["adaptive"] = s.options.adaptive;
    j["max_relative_decrease"] = format_exact(s.options.max_relative_decrease);
    j["scheme"] = "explicit euler";
    j["time_convention"] = kRateConvention;
}

}  // namespace

std::string_view command_name(Command command) {
    switch (command) {
        case Command::Simulate: return "simulate";
        case Command::Ensemble: return "ensemble";
        case Command::Integrate: return "integrate";
        case Command::KernelCheck: return "kernel-check";
        case Command::Sweep: return "sweep";
        case Command::Gini: return "gini";
    }
    return "unknown";
}

nlohmann::ordered_json emit_metadata(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["tool"] = "kinex";
    j["version"] = KINEX_VERSION;
    j["command"] = std::string(command_name(config.command));
    if (const auto* sim = std::get_if<SimConfig>(&config.settings)) sim_block(j, *sim);
    if (const auto* in = std::get_if<IntegrateSettings>(&config.settings)) integrate_block(j, *in);
    if (config.replicas > 0) j["replicas"] = config.replicas;
    if (!config.output.empty()) j["output"] = config.output;
    j["float_format"] = "12 significant digits";
    return j;
}

std::string metadata_path(const std::string& output) { return output + ".meta.json"; }

void write_metadata_file(const std::string& path, const ExperimentConfig& config) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot write " + path);
    os << emit_metadata(config).dump(2) << '\n';
    if (!os) throw InvalidArgument("failed writing " + path);
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
    os << "t,gini,liquidity,mean_wealth,top_share,zero_fraction,gini_gap\n";
    for (const auto& r : records) {
        os << format_g12(r.t) << ',' << format_g12(r.gini) << ',' << format_g12(r.liquidity)
           << ',' << format_g12(r.mean_wealth) << ',' << format_g12(r.top_share) << ','
           << format_g12(r.zero_fraction) << ',' << format_g12(r.gini_gap) << '\n';
    }
}

void write_ensemble_csv(std::ostream& os, const EnsembleSummary& s) {
    os << "t,replicas,gini_mean,gini_std,liquidity_mean,liquidity_std,gini_gap_mean\n";
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        os << format_g12(s.t[k]) << ',' << s.replicas << ',' << format_g12(s.gini_mean[k]) << ','
           << format_g12(s.gini_std[k]) << ',' << format_g12(s.liquidity_mean[k]) << ','
           << format_g12(s.liquidity_std[k]) << ',' << format_g12(s.gini_gap_mean[k]) << '\n';
    }
}

void write_integration_csv(std::ostream& os, const IntegrationReport& report, std::size_t every) {
    if (every == 0) every = 1;
    os << "t,dt,gini,gini_rate,liquidity,mass_drift,mean_drift,max_mobility_ratio\n";
    const std::size_t last = report.steps.empty() ? 0 : report.steps.size() - 1;
    for (std::size_t k = 0; k < report.steps.size(); ++k) {
        if (k % every != 0 && k != last) continue;
        const StepRecord& r = report.steps[k];
        os << format_g12(r.t) << ',' << format_g12(r.dt) << ',' << format_g12(r.gini) << ','
           << format_g12(r.gini_rate) << ',' << format_g12(r.liquidity) << ','
           << format_g12(r.mass_drift) << ',' << format_g12(r.mean_drift) << ','
           << format_g12(r.max_mobility_ratio) << '\n';
    }
}

void write_grid_snapshots_csv(std::ostream& os, const WealthGrid& grid,
                              const std::vector<GridSnapshot>& snapshots) {
    const auto x = grid.points();
    os << "t,cell_center,mass\n";
    for (const auto& snap : snapshots) {
        if (snap.masses.size() != x.size()) throw InvalidArgument("snapshot does not match grid");
        for (std::size_t k = 0; k < x.size(); ++k) {
            os << format_g12(snap.t) << ',' << format_g12(x[k]) << ','
               << format_g12(snap.masses[k]) << '\n';
        }
    }
}

namespace {

SimConfig config_for(const SweepSpec& spec, const std::string& value) {
    SimConfig c = spec.base;
    switch (spec.parameter) {
        case SweepSpec::Parameter::Lambda: {
            const RuleKind kind = c.rule.kind();
            if (kind == RuleKind::IglesiasAlmeida) {
                throw InvalidArgument("iglesias-almeida has no lambda to sweep");
            }
            c.rule = parse_rule_string(std::string(rule_name(kind)) + ":lambda=" + value);
            break;
        }
        case SweepSpec::Parameter::N: {
            std::size_t n = 0;
            std::size_t used = 0;
            try {
                n = std::stoull(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != value.size() || value.empty() || value[0] == '-') {
                throw InvalidArgument("malformed N '" + value + "'");
            }
            c.n = n;
            break;
        }
        case SweepSpec::Parameter::Rule:
            c.rule = parse_rule_string(value);
            break;
    }
    return c;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    if (spec.values.empty()) throw InvalidArgument("sweep needs at least one value");
    if (spec.replicas == 0) throw InvalidArgument("sweep needs at least one replica");

    std::vector<SweepRow> rows;
    rows.reserve(spec.values.size());
    for (const std::string& value : spec.values) {
        SweepRow row;
        row.value = value;
        row.n = spec.base.n;
        row.rule = format_rule_string(spec.base.rule);
        try {
            const SimConfig c = config_for(spec, value);
            row.n = c.n;
            row.rule = format_rule_string(c.rule);
            row.max_gini = static_cast<double>(c.n - 1) / static_cast<double>(c.n);
            if (spec.replicas == 1) {
                const Trajectory traj = run(c);
                const MetricsRecord& last = traj.records.back();
                row.final_gini = last.gini;
                row.final_liquidity = last.liquidity;
                row.final_gini_gap = last.gini_gap;
                if (traj.stop_reason == StopReason::Condensed) {
                    row.sweeps_to_condensation = static_cast<std::int64_t>(traj.sweeps_run);
                }
            } else {
                const EnsembleSummary s = run_ensemble(c, spec.replicas);
                row.final_gini = s.gini_mean.back();
                row.final_liquidity = s.liquidity_mean.back();
                row.final_gini_gap = s.gini_gap_mean.back();
                // First recorded time at which the mean trajectory meets the stop rule.
                for (std::size_t k = 0; k < s.t.size() && c.stop.active(); ++k) {
                    MetricsRecord rec;
                    rec.gini_gap = s.gini_gap_mean[k];
                    rec.liquidity = s.liquidity_mean[k];
                    if (c.stop.met(rec)) {
                        row.sweeps_to_condensation = static_cast<std::int64_t>(s.t[k]);
                        break;
                    }
                }
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "value,n,rule,final_gini,final_liquidity,final_gini_gap,max_gini,"
          "sweeps_to_condensation,error\n";
    for (const auto& r : rows) {
        std::string error = r.error;
        for (char& ch : error) {
            if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
        }
        os << r.value << ',' << r.n << ',' << r.rule << ',';
        if (r.error.empty()) {
            os << format_g12(r.final_gini) << ',' << format_g12(r.final_liquidity) << ','
               << format_g12(r.final_gini_gap) << ',' << format_g12(r.max_gini) << ','
               << r.sweeps_to_condensation << ",\n";
        } else {
            os << ",,,," << r.sweeps_to_condensation << ',' << error << '\n';
        }
    }
}

}  // namespace kinex
