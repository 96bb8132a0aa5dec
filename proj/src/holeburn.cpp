#include "spinhole/holeburn.hpp"

#include <cmath>

#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

const char* feature_sign_name(FeatureSign sign) { return sign == FeatureSign::hole ? "hole" : "anti-hole"; }

double HolePattern::hole_area() const {
    double sum = 0.0;
    for (double d : population_change) sum += d < 0.0 ? -d : 0.0;
    return sum;
}

double HolePattern::anti_hole_area() const {
    double sum = 0.0;
    for (double d : population_change) sum += d > 0.0 ? d : 0.0;
    return sum;
}

std::vector<HoleFeature> pattern_features(const TransitionTable& table,
                                          const std::array<double, kHyperfineStates>& change) {
    std::vector<HoleFeature> out;
    for (const auto& t : table.transitions) {
        const double d = change[t.ground];
        if (d == 0.0) continue;
        out.push_back(HoleFeature{t.frequency, d < 0.0 ? FeatureSign::hole : FeatureSign::anti_hole,
                                  std::abs(d) * t.rel_strength, t.ground, t.excited});
    }
    return out;
}

namespace {

void burn_point(const TransitionTable& table, double frequency, double depth, const BurnOptions& options,
                const Branching& branching, std::map<std::pair<int, int>, double>& moved,
                std::vector<int>& burned) {
    for (const auto& t : table.transitions) {
        if (std::abs(t.frequency - frequency) > options.resonance_window) continue;
        const double removed = depth * t.rel_strength;
        for (const auto& [dest, prob] : branching.destinations(t.excited)) {
            moved[{t.ground, dest}] += removed * prob;
        }
        burned.push_back(t.ground);
    }
}

}  // namespace

HolePattern predict_holes_antiholes(const LevelScheme& scheme, const TransitionTable& table,
                                    double burn_frequency, const Branching& branching,
                                    const BurnOptions& options) {
    (void)scheme;
    branching.validate();
    if (!(options.resonance_window > 0.0) || !(options.depth > 0.0) || !(options.trench_width >= 0.0)) {
        fail(ErrorCategory::invalid_config, "burn window, depth and trench width must be positive");
    }
    std::map<std::pair<int, int>, double> moved;
    std::vector<int> burned;
    if (options.trench_width > 0.0) {
        if (options.trench_samples < 2) fail(ErrorCategory::invalid_config, "trench needs at least 2 samples");
        const int n = options.trench_samples;
        for (int i = 0; i < n; ++i) {
            const double f = burn_frequency + options.trench_width * (static_cast<double>(i) / (n - 1) - 0.5);
            burn_point(table, f, options.depth / n, options, branching, moved, burned);
        }
    } else {
        burn_point(table, burn_frequency, options.depth, options, branching, moved, burned);
    }

    HolePattern pattern;
    if (burned.empty()) {
        pattern.warnings.push_back(
            fmt::format("burn frequency {:.6g} Hz is not resonant with any transition", burn_frequency));
        return pattern;
    }
    for (const auto& [key, amount] : moved) {
        if (key.first == key.second || amount == 0.0) continue;
        pattern.transfers.push_back({key.first, key.second, amount});
        pattern.population_change[key.first] -= amount;
        pattern.population_change[key.second] += amount;
    }
    pattern.features = pattern_features(table, pattern.population_change);
    // A burned state whose population fully returns still shows its holes.
    for (int g : burned) {
        if (pattern.population_change[g] != 0.0) continue;
        bool listed = false;
        for (const auto& f : pattern.features) listed = listed || f.ground == g;
        if (listed) continue;
        for (const auto& t : table.transitions) {
            if (t.ground == g) pattern.features.push_back({t.frequency, FeatureSign::hole, 0.0, g, t.excited});
        }
    }
    return pattern;
}

std::vector<HoleDecaySnapshot> simulate_hole_decay(const HolePattern& pattern, const TransitionTable& table,
                                                   double gamma, const std::map<int, double>& cross_relax,
                                                   std::span<const double> times) {
    if (!(gamma >= 0.0)) fail(ErrorCategory::domain, "relaxation rate must be >= 0");
    for (const auto& [dm, rate] : cross_relax) {
        if (!(rate >= 0.0)) fail(ErrorCategory::domain, fmt::format("cross-relaxation rate for {} must be >= 0", dm));
    }
    auto rate_for = [&](int distance) {
        double r = gamma;
        if (auto it = cross_relax.find(distance); it != cross_relax.end()) r += it->second;
        else if (auto neg = cross_relax.find(-distance); neg != cross_relax.end()) r += neg->second;
        return r;
    };
    std::vector<HoleDecaySnapshot> out;
    out.reserve(times.size());
    for (double t : times) {
        if (!(t >= 0.0)) fail(ErrorCategory::domain, "decay times must be >= 0");
        HolePattern snap;
        for (const auto& tr : pattern.transfers) {
            const double left = tr.amount * std::exp(-rate_for(std::abs(tr.to - tr.from)) * t);
            snap.transfers.push_back({tr.from, tr.to, left});
            snap.population_change[tr.from] -= left;
            snap.population_change[tr.to] += left;
        }
        snap.features = pattern_features(table, snap.population_change);
        out.push_back({t, std::move(snap)});
    }
    return out;
}

}  // namespace spinhole
