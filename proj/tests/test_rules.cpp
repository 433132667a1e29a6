#include <doctest.h>

#include <cmath>

#include "kinex/error.hpp"
#include "kinex/rules.hpp"
#include "oracles.hpp"

using namespace kinex;

namespace {

const RuleSpec kYardSale = RuleSpec::fixed(RuleKind::YardSale, 0.5);

void check_atoms(const DeltaDistribution& d, std::vector<DeltaAtom> expected) {
    REQUIRE(d.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(d[k].delta == doctest::Approx(expected[k].delta).epsilon(1e-15));
        CHECK(d[k].probability == doctest::Approx(expected[k].probability).epsilon(1e-15));
    }
}

double sum_delta_p(const DeltaDistribution& d) {
    double s = 0.0, p = 0.0;
    for (const auto& a : d) {
        s += a.delta * a.probability;
        p += a.probability;
    }
    CHECK(p == doctest::Approx(1.0).epsilon(1e-15));
    return s;
}

}  // namespace

TEST_CASE("delta distributions of the four rules") {
    check_atoms(delta_distribution(kYardSale, 1, 3, 0.5), {{0.5, 0.5}, {-0.5, 0.5}});
    check_atoms(delta_distribution(RuleSpec::fixed(RuleKind::UnbiasedLoser, 0.25), 2, 4, 0.25),
                {{1.0, 1.0 / 3.0}, {-0.5, 2.0 / 3.0}});
    check_atoms(delta_distribution(RuleSpec::iglesias_almeida(), 2, 2, 1.0), {{1.0, 0.5}, {-1.0, 0.5}});
    check_atoms(delta_distribution(RuleSpec::fixed(RuleKind::ClassicLoser, 0.25), 2, 4, 0.25),
                {{1.0, 0.5}, {-0.5, 0.5}});

    const auto zero = delta_distribution(RuleSpec::fixed(RuleKind::YardSale, 1.0), 0, 7, 1.0);
    CHECK(zero.degenerate_zero());
    CHECK(zero[0].probability == 1.0);
    CHECK_FALSE(std::signbit(zero[0].delta));
}

TEST_CASE("degenerate inputs collapse to a single zero atom") {
    for (const RuleSpec& r : {kYardSale, RuleSpec::fixed(RuleKind::UnbiasedLoser, 0.5),
                              RuleSpec::iglesias_almeida(), RuleSpec::fixed(RuleKind::ClassicLoser, 0.5)}) {
        CHECK(delta_distribution(r, 0, 0, 0.5).degenerate_zero());
        if (r.has_lambda()) CHECK(delta_distribution(r, 3, 2, 0.0).degenerate_zero());
    }
    // The classic rule is not absorbing at zero: the poorer agent can still win.
    const auto classic = delta_distribution(RuleSpec::fixed(RuleKind::ClassicLoser, 0.5), 0, 4, 0.5);
    CHECK_FALSE(classic.degenerate_zero());
    check_atoms(classic, {{2.0, 0.5}, {0.0, 0.5}});
}

TEST_CASE("invalid arguments are rejected") {
    CHECK_THROWS_AS(delta_distribution(kYardSale, -1, 2, 0.5), InvalidArgument);
    CHECK_THROWS_AS(delta_distribution(kYardSale, 1, 2, 1.5), InvalidArgument);
    CHECK_THROWS_AS(delta_distribution(kYardSale, 1, NAN, 0.5), InvalidArgument);
}

TEST_CASE("expected deltas in closed form") {
    CHECK(expected_delta(RuleSpec::fixed(RuleKind::ClassicLoser, 0.5), 2, 4, 0.5) == doctest::Approx(0.5));
    CHECK(expected_delta(RuleSpec::fixed(RuleKind::UnbiasedLoser, 0.5), 2, 4, 0.7) == 0.0);
    CHECK(expected_delta(RuleSpec::fixed(RuleKind::YardSale, 0.9), 5, 1, 0.9) == 0.0);

    CHECK(expected_abs_delta(kYardSale, 1, 3, 0.5) == doctest::Approx(0.5));
    const auto ul = RuleSpec::fixed(RuleKind::UnbiasedLoser, 0.25);
    double oracle = 0.0;
    for (const auto& a : delta_distribution(ul, 2, 4, 0.25)) oracle += std::fabs(a.delta) * a.probability;
    CHECK(expected_abs_delta(ul, 2, 4, 0.25) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(oracle == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    for (const RuleSpec& r : {kYardSale, ul, RuleSpec::iglesias_almeida()}) {
        CHECK(expected_abs_delta(r, 0, 3, 0.5) == 0.0);
    }
}

TEST_CASE("closed forms agree with the atoms on random inputs") {
    RngStream rng(77, 0);
    const RuleSpec rules[] = {kYardSale, RuleSpec::fixed(RuleKind::UnbiasedLoser, 0.5),
                              RuleSpec::iglesias_almeida(), RuleSpec::fixed(RuleKind::ClassicLoser, 0.5)};
    for (int trial = 0; trial < 2000; ++trial) {
        const double x = std::exp(8.0 * rng.uniform() - 4.0);
        const double xp = std::exp(8.0 * rng.uniform() - 4.0);
        const double lambda = rng.uniform();
        for (const RuleSpec& r : rules) {
            const auto d = delta_distribution(r, x, xp, lambda);
            double abs = 0.0;
            for (const auto& a : d) {
                abs += std::fabs(a.delta) * a.probability;
                // Support keeps both agents non-negative.
                CHECK(x + a.delta >= 0.0);
                CHECK(xp - a.delta >= 0.0);
            }
            const double scale = x + xp;
            CHECK(std::fabs(sum_delta_p(d) - expected_delta(r, x, xp, lambda)) <= 1e-13 * scale);
            CHECK(std::fabs(abs - expected_abs_delta(r, x, xp, lambda)) <= 1e-13 * scale);
        }
    }
}

TEST_CASE("scripted coins drive the sampler") {
    oracle::ScriptedSource win({0.2});
    const auto s = sample_delta(kYardSale, 1, 3, win);
    CHECK(s.delta == 0.5);
    CHECK(s.coin == 1);

    oracle::ScriptedSource lose({0.7});
    const auto c = sample_delta(RuleSpec::fixed(RuleKind::ClassicLoser, 0.25), 2, 4, lose);
    CHECK(c.delta == -0.5);
    CHECK(c.coin == 0);

    // Random lambda: the first uniform is lambda itself.
    oracle::ScriptedSource two({0.3, 0.1});
    const auto r = sample_delta(RuleSpec::uniform_lambda(RuleKind::YardSale), 2, 5, two);
    CHECK(r.lambda_used == 0.3);
    CHECK(r.delta == doctest::Approx(0.6));
    CHECK(two.exhausted());

    oracle::ScriptedSource ia({0.9});
    const auto i = sample_delta(RuleSpec::iglesias_almeida(), 2, 2, ia);
    CHECK(i.delta == -1.0);
    CHECK(i.coin == -1);
}

TEST_CASE("unbiased loser win frequency matches x_i / (x_i + x_j)") {
    RngStream rng(2024, 0);
    const auto rule = RuleSpec::fixed(RuleKind::UnbiasedLoser, 0.5);
    int wins = 0;
    const int samples = 100000;
    for (int k = 0; k < samples; ++k) {
        if (sample_delta(rule, 1, 3, rng).delta > 0.0) ++wins;
    }
    CHECK(std::fabs(wins / static_cast<double>(samples) - 0.25) <= 0.005);
}

TEST_CASE("random lambda averages to the half-lambda closed form") {
    RngStream rng(11, 0);
    const auto rule = RuleSpec::uniform_lambda(RuleKind::YardSale);
    double acc = 0.0;
    const int samples = 200000;
    for (int k = 0; k < samples; ++k) acc += std::fabs(sample_delta(rule, 2, 3, rng).delta);
    // E|delta| = E[lambda] * min = 1; standard error about 0.0013.
    CHECK(acc / samples == doctest::Approx(1.0).epsilon(0.01));
}
