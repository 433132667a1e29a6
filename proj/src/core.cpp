#include "kinex/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kinex/error.hpp"
#include "kinex/format.hpp"
#include "kinex/log.hpp"

namespace kinex {

namespace {

constexpr double kSnapTolerance = 1e-15;
constexpr double kTotalTolerance = 1e-12;

void require_size(const std::vector<double>& wealth) {
    if (wealth.size() < 2) throw InvalidArgument("population needs at least 2 agents");
}

}  // namespace

Population::Population(std::vector<double> wealth) : wealth_(std::move(wealth)) {
    require_size(wealth_);
    total_ = std::accumulate(wealth_.begin(), wealth_.end(), 0.0);
}

Population::Population(std::vector<double> wealth, double cached_total)
    : wealth_(std::move(wealth)), total_(cached_total) {
    require_size(wealth_);
}

Population Population::equal(std::size_t n, double mean_wealth) {
    if (!(mean_wealth >= 0.0) || !std::isfinite(mean_wealth)) {
        throw InvalidArgument("mean wealth must be a finite non-negative number");
    }
    return Population(std::vector<double>(n, mean_wealth),
                      mean_wealth * static_cast<double>(n));
}

RuleSpec RuleSpec::fixed(RuleKind kind, double lambda) {
    if (kind == RuleKind::IglesiasAlmeida) {
        throw InvalidArgument("the iglesias-almeida rule takes no lambda");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("lambda must lie in [0, 1], got " + format_exact(lambda));
    }
    return RuleSpec(kind, lambda, false);
}

RuleSpec RuleSpec::uniform_lambda(RuleKind kind) {
    if (kind == RuleKind::IglesiasAlmeida) {
        throw InvalidArgument("the iglesias-almeida rule takes no lambda");
    }
    return RuleSpec(kind, 0.5, true);
}

RuleSpec RuleSpec::iglesias_almeida() { return RuleSpec(RuleKind::IglesiasAlmeida, 1.0, false); }

std::string_view rule_name(RuleKind kind) {
    switch (kind) {
        case RuleKind::ClassicLoser: return "loser";
        case RuleKind::YardSale: return "yardsale";
        case RuleKind::UnbiasedLoser: return "unbiased-loser";
        case RuleKind::IglesiasAlmeida: return "iglesias-almeida";
    }
    return "?";
}

void apply_exchange(Population& pop, const ExchangeOutcome& out) {
    auto& w = pop.wealth_;
    if (out.i >= w.size() || out.j >= w.size() || out.i == out.j) {
        throw ContractViolation("exchange needs two distinct agents in range");
    }
    double delta = out.delta;
    const double xi = w[out.i];
    const double xj = w[out.j];
    const double tol = kSnapTolerance * pop.mean();
    if (!std::isfinite(delta)) throw ContractViolation("non-finite exchange delta");

    if (delta < -xi) {
        if (-xi - delta > tol) {
            throw ContractViolation("delta " + format_exact(delta) + " below -x_i = " +
                                    format_exact(-xi));
        }
        delta = -xi;
        ++pop.snapped_;
        warn("exchange snapped agent " + std::to_string(out.i) + " to zero");
    } else if (delta > xj) {
        if (delta - xj > tol) {
            throw ContractViolation("delta " + format_exact(delta) + " above x_j = " +
                                    format_exact(xj));
        }
        delta = xj;
        ++pop.snapped_;
        warn("exchange snapped agent " + std::to_string(out.j) + " to zero");
    }

    // Exact zeros when an agent loses everything.
    w[out.i] = (delta == -xi) ? 0.0 : xi + delta;
    w[out.j] = (delta == xj) ? 0.0 : xj - delta;
}

PopulationReport validate_population(const Population& pop) {
    PopulationReport report;
    const auto w = pop.wealth();
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (!(w[k] >= 0.0)) {
            report.violations.push_back({PopulationViolation::Kind::Negative, k, w[k]});
        }
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    const double scale = std::max(std::abs(pop.total()), std::abs(sum));
    if (std::abs(sum - pop.total()) > kTotalTolerance * scale || !std::isfinite(sum)) {
        report.violations.push_back({PopulationViolation::Kind::TotalMismatch, 0, sum});
    }
    return report;
}

void write_population_snapshot(std::ostream& os, const Population& pop, std::uint64_t sweeps) {
    os << "# kinex population N=" << pop.size() << " t=" << sweeps << '\n';
    for (double x : pop.wealth()) os << format_exact(x) << '\n';
}

PopulationSnapshot read_population_snapshot(std::istream& is) {
    std::vector<double> wealth;
    std::optional<std::uint64_t> sweeps;
    std::optional<std::size_t> declared_n;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            std::istringstream header(line.substr(first + 1));
            std::string token;
            while (header >> token) {
                if (token.rfind("N=", 0) == 0) declared_n = std::stoull(token.substr(2));
                if (token.rfind("t=", 0) == 0) sweeps = std::stoull(token.substr(2));
            }
            continue;
        }
        const auto last = line.find_last_not_of(" \t");
        const std::string field = line.substr(first, last - first + 1);
        double x = 0.0;
        try {
            x = parse_double(field);
        } catch (const InvalidArgument&) {
            throw InvalidArgument("population line " + std::to_string(line_no) +
                                  ": not a number: '" + field + "'");
        }
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw InvalidArgument("population line " + std::to_string(line_no) +
                                  ": wealth must be finite and non-negative");
        }
        wealth.push_back(x);
    }
    if (declared_n && *declared_n != wealth.size()) {
        throw InvalidArgument("population header declares N=" + std::to_string(*declared_n) +
                              " but " + std::to_string(wealth.size()) + " values follow");
    }
    return {Population(std::move(wealth)), sweeps};
}

PopulationSnapshot read_population_snapshot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open population file '" + path + "'");
    return read_population_snapshot(in);
}

}  // namespace kinex
