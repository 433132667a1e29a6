#include "kinex/rules.hpp"

#include <algorithm>
#include <cmath>

#include "kinex/error.hpp"
#include "kinex/format.hpp"

namespace kinex {

namespace {

void check_arguments(double x_i, double x_j, double lambda) {
    if (!(x_i >= 0.0) || !(x_j >= 0.0) || !std::isfinite(x_i) || !std::isfinite(x_j)) {
        throw InvalidArgument("wealths must be finite and non-negative, got (" +
                              format_exact(x_i) + ", " + format_exact(x_j) + ")");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("lambda must lie in [0, 1], got " + format_exact(lambda));
    }
}

// x_i x_j / (x_i + x_j), zero for an empty pair.
double harmonic_half(double x_i, double x_j) {
    const double s = x_i + x_j;
    return s > 0.0 ? x_i * x_j / s : 0.0;
}

}  // namespace

DeltaDistribution DeltaDistribution::two_point(DeltaAtom win, DeltaAtom lose) {
    DeltaDistribution d;
    win.delta += 0.0;
    lose.delta += 0.0;
    if (win.delta == lose.delta) {
        d.atoms_[0] = {win.delta, 1.0};
        d.count_ = 1;
        return d;
    }
    for (const auto& atom : {win, lose}) {
        if (atom.probability > 0.0) d.atoms_[d.count_++] = atom;
    }
    if (d.count_ == 1) d.atoms_[0].probability = 1.0;
    return d;
}

CoinLaw coin_law(const RuleSpec& rule, double x_i, double x_j, double lambda) {
    check_arguments(x_i, x_j, lambda);
    switch (rule.kind()) {
        case RuleKind::ClassicLoser:
            return {lambda * x_j, -lambda * x_i, 0.5};
        case RuleKind::YardSale: {
            const double stake = lambda * std::min(x_i, x_j);
            return {stake, -stake, 0.5};
        }
        case RuleKind::UnbiasedLoser: {
            const double s = x_i + x_j;
            // Both broke: nothing moves whatever the coin says.
            const double p = s > 0.0 ? x_i / s : 0.5;
            return {lambda * x_j, -lambda * x_i, p};
        }
        case RuleKind::IglesiasAlmeida: {
            const double stake = harmonic_half(x_i, x_j);
            return {stake, -stake, 0.5};
        }
    }
    throw InvalidArgument("unknown rule");
}

DeltaDistribution delta_distribution(const RuleSpec& rule, double x_i, double x_j,
                                     double lambda) {
    const CoinLaw law = coin_law(rule, x_i, x_j, lambda);
    return DeltaDistribution::two_point({law.win, law.p_win}, {law.lose, 1.0 - law.p_win});
}

double expected_delta(const RuleSpec& rule, double x_i, double x_j, double lambda) {
    check_arguments(x_i, x_j, lambda);
    if (rule.kind() == RuleKind::ClassicLoser) return lambda * (x_j - x_i) / 2.0;
    return 0.0;
}

double expected_abs_delta(const RuleSpec& rule, double x_i, double x_j, double lambda) {
    check_arguments(x_i, x_j, lambda);
    switch (rule.kind()) {
        case RuleKind::ClassicLoser: return lambda * (x_i + x_j) / 2.0;
        case RuleKind::YardSale: return lambda * std::min(x_i, x_j);
        case RuleKind::UnbiasedLoser: return 2.0 * lambda * harmonic_half(x_i, x_j);
        case RuleKind::IglesiasAlmeida: return harmonic_half(x_i, x_j);
    }
    return 0.0;
}

DeltaSample realize_delta(const RuleSpec& rule, double x_i, double x_j, double lambda,
                          double u_coin) {
    const CoinLaw law = coin_law(rule, x_i, x_j, lambda);
    const bool win = u_coin < law.p_win;
    const bool loser_family =
        rule.kind() == RuleKind::ClassicLoser || rule.kind() == RuleKind::UnbiasedLoser;
    const int coin = loser_family ? (win ? 1 : 0) : (win ? 1 : -1);
    const double used = rule.kind() == RuleKind::IglesiasAlmeida ? 0.0 : lambda;
    return {(win ? law.win : law.lose) + 0.0, coin, used};
}

}  // namespace kinex
