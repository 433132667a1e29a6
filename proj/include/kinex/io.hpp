#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kinex/core.hpp"
#include "kinex/engine.hpp"
#include "kinex/grid.hpp"
#include "kinex/master_eq.hpp"

namespace kinex {

// Grammar: name[:lambda=<value>], name one of yardsale, loser,
// unbiased-loser, iglesias-almeida; value a number in [0, 1] or "uniform".
// Throws ParseError carrying the offending character position.
RuleSpec parse_rule_string(std::string_view text);
std::string format_rule_string(const RuleSpec& rule);

// "linear:<xmax>:<cells>" or "log:<xmin>:<xmax>:<cells>".
GridSpec parse_grid_string(std::string_view text);
std::string format_grid_string(const GridSpec& spec);

// "point:<x>", "uniform:<a>:<b>" or "exp:<mean>".
DensitySpec parse_density_string(std::string_view text);
std::string format_density_string(const DensitySpec& density);

// "equal", "uniform" or "file:<path>".
InitialCondition parse_initial_string(std::string_view text);
std::string format_initial_string(const InitialCondition& initial);

struct IntegrateSettings {
    RuleSpec rule = RuleSpec::fixed(RuleKind::YardSale, 0.5);
    GridSpec grid = GridSpec::log(1e-6, 1e5, 200);
    DensitySpec initial = PointDensity{1.0};
    double dt = 1.0;
    double t_end = 100.0;
    IntegratorOptions options;
};

enum class Command { Simulate, Ensemble, Integrate, KernelCheck, Sweep, Gini };
std::string_view command_name(Command command);

struct ExperimentConfig {
    Command command = Command::Simulate;
    std::variant<std::monostate, SimConfig, IntegrateSettings> settings;
    std::size_t replicas = 0;  // ensemble / sweep
    std::string output;
};

/// Provenance block written next to every output. Contains no timestamps or
/// host data, so identical configs give identical bytes.
nlohmann::ordered_json emit_metadata(const ExperimentConfig& config);
void write_metadata_file(const std::string& path, const ExperimentConfig& config);
// "<output>.meta.json"
std::string metadata_path(const std::string& output);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records);
void write_ensemble_csv(std::ostream& os, const EnsembleSummary& summary);
void write_integration_csv(std::ostream& os, const IntegrationReport& report,
                           std::size_t every = 1);
// Rows "t,cell_center,mass".
void write_grid_snapshots_csv(std::ostream& os, const WealthGrid& grid,
                              const std::vector<GridSnapshot>& snapshots);

struct SweepSpec {
    enum class Parameter { Lambda, N, Rule };
    Parameter parameter = Parameter::Lambda;
    std::vector<std::string> values;
    SimConfig base;
    std::size_t replicas = 1;  // 1: one simulate run per value; >= 2: ensemble
};

SweepSpec::Parameter parse_sweep_parameter(std::string_view text);

struct SweepRow {
    std::string value;
    std::size_t n = 0;
    std::string rule;
    double final_gini = 0.0;
    double final_liquidity = 0.0;
    double final_gini_gap = 0.0;
    double max_gini = 0.0;  // (N - 1) / N
    std::int64_t sweeps_to_condensation = -1;
    std::string error;  // empty on success
};

// One row per value; a failing value yields a row with `error` set.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace kinex
