#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spinhole/error.hpp"
#include "spinhole/holeburn.hpp"

using namespace spinhole;

namespace {

struct Setup {
    LevelScheme scheme = build_level_scheme();
    TransitionTable table = transition_table(scheme, true);
    Branching branching = Branching::from_strengths(scheme.strengths(), +1);
};

const HoleFeature* feature_at(const HolePattern& p, int ground, int excited) {
    for (const auto& f : p.features) {
        if (f.ground == ground && f.excited == excited) return &f;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("burning the +7/2 -> +7/2 line") {
    const Setup s;
    const double burn = s.scheme.transition_detuning(7, 7);
    const HolePattern p = predict_holes_antiholes(s.scheme, s.table, burn, s.branching);
    REQUIRE_FALSE(p.empty());
    CHECK(p.warnings.empty());

    // Decay from excited +7/2 by -1, -2, -3 feeds +5/2, +3/2 and +1/2.
    const auto dest = s.branching.destinations(7);
    for (const auto& [g, prob] : dest) {
        if (g == 7) continue;
        CHECK(p.population_change[g] == doctest::Approx(prob).epsilon(1e-14));
        const auto* f = feature_at(p, g, g);
        REQUIRE(f != nullptr);
        CHECK(f->sign == FeatureSign::anti_hole);
        CHECK(f->frequency == s.table.find(g, g)->frequency);
        CHECK(f->amplitude == doctest::Approx(prob).epsilon(1e-14));
    }
    for (int g : {0, 1, 2, 3}) CHECK(p.population_change[g] == 0.0);

    const auto* hole = feature_at(p, 7, 7);
    REQUIRE(hole != nullptr);
    CHECK(hole->sign == FeatureSign::hole);
    CHECK(p.population_change[7] < 0.0);

    // Side features follow on the Delta m = -1 lines of the affected states.
    const auto* side = feature_at(p, 7, 6);
    REQUIRE(side != nullptr);
    CHECK(side->sign == FeatureSign::hole);
    CHECK(side->amplitude == doctest::Approx(-p.population_change[7] * s.table.find(7, 6)->rel_strength));
}

TEST_CASE("hole and anti-hole areas balance") {
    const Setup s;
    for (const auto& t : s.table.transitions) {
        if (std::abs(t.delta_m) > 1) continue;
        const HolePattern p = predict_holes_antiholes(s.scheme, s.table, t.frequency, s.branching);
        CHECK(p.hole_area() == doctest::Approx(p.anti_hole_area()).epsilon(1e-14));
        double net = 0.0;
        for (double d : p.population_change) net += d;
        CHECK(std::abs(net) < 1e-15);
    }
}

TEST_CASE("a trench spreads the burn over several classes") {
    const Setup s;
    BurnOptions opts;
    opts.trench_width = 30e6;
    opts.trench_samples = 61;
    const double burn = s.scheme.transition_detuning(7, 7);
    const HolePattern p = predict_holes_antiholes(s.scheme, s.table, burn, s.branching, opts);
    CHECK(p.hole_area() == doctest::Approx(p.anti_hole_area()).epsilon(1e-14));
    int burned_states = 0;
    for (double d : p.population_change) burned_states += d < 0.0;
    CHECK(burned_states > 1);
}

TEST_CASE("full return to the burned state leaves zero-amplitude holes") {
    const Setup s;
    const double burn = s.scheme.transition_detuning(4, 4);
    const HolePattern p = predict_holes_antiholes(s.scheme, s.table, burn, Branching::diagonal());
    CHECK(p.transfers.empty());
    CHECK(p.hole_area() == 0.0);
    REQUIRE_FALSE(p.features.empty());
    for (const auto& f : p.features) {
        CHECK(f.ground == 4);
        CHECK(f.amplitude == 0.0);
    }
}

TEST_CASE("off-resonant burn gives an empty pattern with a warning") {
    const Setup s;
    const HolePattern p = predict_holes_antiholes(s.scheme, s.table, 5e9, s.branching);
    CHECK(p.empty());
    CHECK(p.transfers.empty());
    CHECK(p.warnings.size() == 1);
}

TEST_CASE("burn options are validated") {
    const Setup s;
    BurnOptions opts;
    opts.depth = 0.0;
    CHECK_THROWS_AS(predict_holes_antiholes(s.scheme, s.table, 0.0, s.branching, opts), Error);
    opts = {};
    opts.trench_width = 1e6;
    opts.trench_samples = 1;
    CHECK_THROWS_AS(predict_holes_antiholes(s.scheme, s.table, 0.0, s.branching, opts), Error);
}

TEST_CASE("hole decay") {
    const Setup s;
    const HolePattern p =
        predict_holes_antiholes(s.scheme, s.table, s.scheme.transition_detuning(7, 7), s.branching);
    const double gamma = 1e-3;
    const std::map<int, double> cross{{1, 0.01}, {2, 0.002}};
    const std::vector<double> times{0.0, 10.0, 100.0, 1e5};
    const auto snaps = simulate_hole_decay(p, s.table, gamma, cross, times);
    REQUIRE(snaps.size() == times.size());

    CHECK(snaps[0].pattern.population_change == p.population_change);
    for (const auto& snap : snaps) {
        CHECK(snap.pattern.hole_area() == doctest::Approx(snap.pattern.anti_hole_area()).epsilon(1e-13));
    }
    // Each transfer decays with its own rate.
    const double t = 100.0;
    for (int g : {6, 5, 4}) {
        const double rate = gamma + (cross.count(7 - g) ? cross.at(7 - g) : 0.0);
        CHECK(snaps[2].pattern.population_change[g] ==
              doctest::Approx(p.population_change[g] * std::exp(-rate * t)).epsilon(1e-13));
    }
    CHECK(snaps.back().pattern.hole_area() < 1e-40);

    CHECK_THROWS_AS(simulate_hole_decay(p, s.table, -1.0, {}, times), Error);
    const std::vector<double> negative{-1.0};
    CHECK_THROWS_AS(simulate_hole_decay(p, s.table, gamma, {}, negative), Error);
}
