#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>

#include "kinex/error.hpp"
#include "kinex/format.hpp"
#include "kinex/io.hpp"

namespace kinex {

namespace {

constexpr std::array<RuleKind, 4> kRuleKinds{RuleKind::YardSale, RuleKind::ClassicLoser,
                                             RuleKind::UnbiasedLoser, RuleKind::IglesiasAlmeida};

std::string valid_rule_names() {
    std::string out;
    for (RuleKind kind : kRuleKinds) {
        if (!out.empty()) out += ", ";
        out += rule_name(kind);
    }
    return out;
}

// Splits on ':' and remembers where every field starts.
struct Field {
    std::string_view text;
    std::size_t pos;
};

std::vector<Field> split_fields(std::string_view s) {
    std::vector<Field> out;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= s.size(); ++k) {
        if (k == s.size() || s[k] == ':') {
            out.push_back({s.substr(start, k - start), start});
            start = k + 1;
        }
    }
    return out;
}

double number_at(const Field& f, const char* what) {
    if (f.text.empty()) throw ParseError(std::string("missing ") + what, f.pos);
    try {
        const double v = parse_double(std::string(f.text));
        if (!std::isfinite(v)) throw ParseError(std::string(what) + " must be finite", f.pos);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const InvalidArgument&) {
        throw ParseError(std::string("malformed ") + what + " '" + std::string(f.text) + "'",
                         f.pos);
    }
}

std::size_t count_at(const Field& f, const char* what) {
    std::size_t v = 0;
    const char* first = f.text.data();
    const char* last = first + f.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (f.text.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError(std::string("malformed ") + what + " '" + std::string(f.text) + "'",
                         f.pos);
    }
    return v;
}

void expect_fields(const std::vector<Field>& f, std::size_t n, std::string_view text,
                   const char* usage) {
    if (f.size() == n) return;
    const std::size_t pos = f.size() > n ? f[n].pos - 1 : text.size();
    throw ParseError("expected " + std::string(usage), pos);
}

}  // namespace

RuleSpec parse_rule_string(std::string_view text) {
    const std::size_t colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const RuleKind* kind = nullptr;
    for (const RuleKind& k : kRuleKinds) {
        if (rule_name(k) == name) kind = &k;
    }
    if (!kind) {
        throw ParseError("unknown rule '" + std::string(name) +
                             "'; valid rules: " + valid_rule_names(),
                         0);
    }
    if (*kind == RuleKind::IglesiasAlmeida) {
        if (colon != std::string_view::npos) {
            throw ParseError("iglesias-almeida takes no parameters", colon);
        }
        return RuleSpec::iglesias_almeida();
    }
    if (colon == std::string_view::npos) {
        throw ParseError("rule '" + std::string(name) + "' needs ':lambda=<value|uniform>'",
                         text.size());
    }
    const std::string_view param = text.substr(colon + 1);
    constexpr std::string_view key = "lambda=";
    if (param.substr(0, key.size()) != key) {
        throw ParseError("expected 'lambda='", colon + 1);
    }
    const Field value{param.substr(key.size()), colon + 1 + key.size()};
    if (value.text == "uniform") return RuleSpec::uniform_lambda(*kind);
    const double lambda = number_at(value, "lambda");
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ParseError("lambda " + std::string(value.text) + " is outside [0, 1]", value.pos);
    }
    return RuleSpec::fixed(*kind, lambda);
}

std::string format_rule_string(const RuleSpec& rule) {
    std::string out(rule_name(rule.kind()));
    if (!rule.has_lambda()) return out;
    out += ":lambda=";
    out += rule.random_lambda() ? std::string("uniform") : format_exact(rule.lambda());
    return out;
}

GridSpec parse_grid_string(std::string_view text) {
    const auto f = split_fields(text);
    try {
        std::optional<GridSpec> spec;
        if (f[0].text == "linear") {
            expect_fields(f, 3, text, "linear:<xmax>:<cells>");
            spec = GridSpec::linear(number_at(f[1], "x_max"), count_at(f[2], "cell count"));
        } else if (f[0].text == "log") {
            expect_fields(f, 4, text, "log:<xmin>:<xmax>:<cells>");
            spec = GridSpec::log(number_at(f[1], "x_min"), number_at(f[2], "x_max"),
                                 count_at(f[3], "cell count"));
        }
        if (spec) {
            grid_nodes(*spec);  // rejects inconsistent bounds
            return *spec;
        }
    } catch (const ParseError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), 0);
    }
    throw ParseError("unknown grid scheme '" + std::string(f[0].text) + "'; valid: linear, log",
                     0);
}

std::string format_grid_string(const GridSpec& spec) {
    if (spec.scheme == GridSpec::Scheme::Linear) {
        return "linear:" + format_exact(spec.x_max) + ":" + std::to_string(spec.cells);
    }
    return "log:" + format_exact(spec.x_min) + ":" + format_exact(spec.x_max) + ":" +
           std::to_string(spec.cells);
}

DensitySpec parse_density_string(std::string_view text) {
    const auto f = split_fields(text);
    if (f[0].text == "point") {
        expect_fields(f, 2, text, "point:<x>");
        const double x = number_at(f[1], "point");
        if (!(x > 0.0)) throw ParseError("point mass must sit at x > 0", f[1].pos);
        return PointDensity{x};
    }
    if (f[0].text == "uniform") {
        expect_fields(f, 3, text, "uniform:<a>:<b>");
        const double a = number_at(f[1], "lower bound");
        const double b = number_at(f[2], "upper bound");
        if (!(a >= 0.0)) throw ParseError("lower bound must be >= 0", f[1].pos);
        if (!(b > a)) throw ParseError("upper bound must exceed lower bound", f[2].pos);
        return UniformDensity{a, b};
    }
    if (f[0].text == "exp") {
        expect_fields(f, 2, text, "exp:<mean>");
        const double mean = number_at(f[1], "mean");
        if (!(mean > 0.0)) throw ParseError("mean must be positive", f[1].pos);
        return ExponentialDensity{mean};
    }
    throw ParseError("unknown initial density '" + std::string(f[0].text) +
                         "'; valid: point, uniform, exp",
                     0);
}

std::string format_density_string(const DensitySpec& density) {
    return std::visit(
        [](const auto& d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, PointDensity>) {
                return "point:" + format_exact(d.x);
            } else if constexpr (std::is_same_v<T, UniformDensity>) {
                return "uniform:" + format_exact(d.a) + ":" + format_exact(d.b);
            } else {
                return "exp:" + format_exact(d.mean);
            }
        },
        density);
}

InitialCondition parse_initial_string(std::string_view text) {
    if (text == "equal") return EqualInitial{};
    if (text == "uniform") return UniformInitial{};
    constexpr std::string_view prefix = "file:";
    if (text.substr(0, prefix.size()) == prefix) {
        if (text.size() == prefix.size()) throw ParseError("missing file path", prefix.size());
        return FileInitial{std::string(text.substr(prefix.size()))};
    }
    throw ParseError("unknown initial condition '" + std::string(text) +
                         "'; valid: equal, uniform, file:<path>",
                     0);
}

std::string format_initial_string(const InitialCondition& initial) {
    return std::visit(
        [](const auto& init) -> std::string {
            using T = std::decay_t<decltype(init)>;
            if constexpr (std::is_same_v<T, EqualInitial>) {
                return "equal";
            } else if constexpr (std::is_same_v<T, UniformInitial>) {
                return "uniform";
            } else if constexpr (std::is_same_v<T, FileInitial>) {
                return "file:" + init.path;
            } else {
                return "given";
            }
        },
        initial);
}

SweepSpec::Parameter parse_sweep_parameter(std::string_view text) {
    if (text == "lambda") return SweepSpec::Parameter::Lambda;
    if (text == "N" || text == "n") return SweepSpec::Parameter::N;
    if (text == "rule") return SweepSpec::Parameter::Rule;
    throw ParseError("unknown sweep parameter '" + std::string(text) + "'; valid: lambda, N, rule",
                     0);
}

}  // namespace kinex
