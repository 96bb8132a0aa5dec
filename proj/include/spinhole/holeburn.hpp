#pragma once

// Hole and anti-hole patterns produced by optical pumping out of a narrow
// spectral class, and their relaxation back toward the unburned spectrum.

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spinhole/dynamics.hpp"
#include "spinhole/levels.hpp"

namespace spinhole {

enum class FeatureSign { hole, anti_hole };

const char* feature_sign_name(FeatureSign sign);

struct HoleFeature {
    double frequency;  // Hz, relative to the optical origin
    FeatureSign sign;
    double amplitude;  // |population change| x transition strength
    int ground;        // hyperfine index of the ground state carrying the feature
    int excited;
};

/// Population moved by the burn from one ground state to another.
struct PopulationTransfer {
    int from;
    int to;
    double amount;
};

struct HolePattern {
    std::vector<HoleFeature> features;
    std::vector<PopulationTransfer> transfers;
    std::array<double, kHyperfineStates> population_change{};
    std::vector<std::string> warnings;

    bool empty() const { return features.empty(); }
    double hole_area() const;      // total population removed
    double anti_hole_area() const;  // total population added
};

struct BurnOptions {
    /// Transitions within this distance of the burn frequency are burned.
    double resonance_window = 1e6;  // Hz
    /// Population removed from a burned ground state per unit strength.
    double depth = 1.0;
    /// Non-zero burns a trench of this width centred on the burn frequency.
    double trench_width = 0.0;  // Hz
    int trench_samples = 41;
};

HolePattern predict_holes_antiholes(const LevelScheme& scheme, const TransitionTable& table,
                                    double burn_frequency, const Branching& branching,
                                    const BurnOptions& options = {});

/// Features implied by a set of per-ground population changes.
std::vector<HoleFeature> pattern_features(const TransitionTable& table,
                                          const std::array<double, kHyperfineStates>& change);

struct HoleDecaySnapshot {
    double time;
    HolePattern pattern;
};

/// Each transfer relaxes independently at gamma + cross_relax(|m_to - m_from|);
/// missing entries of `cross_relax` are zero.
std::vector<HoleDecaySnapshot> simulate_hole_decay(const HolePattern& pattern, const TransitionTable& table,
                                                   double gamma, const std::map<int, double>& cross_relax,
                                                   std::span<const double> times);

}  // namespace spinhole
