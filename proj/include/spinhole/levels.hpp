#pragma once

// Hyperfine level structure of an I = 7/2 Kramers ion frozen into its lower
// electronic Zeeman branch, and the optical transitions between the ground
// and excited hyperfine ladders.
//
// Hyperfine states are addressed everywhere by an index 0..7, which maps to
// m_I = -7/2 .. +7/2 (index 0 is -7/2, index 7 is +7/2).

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace spinhole {

inline constexpr int kHyperfineStates = 8;

struct PhysicalConstants {
    static constexpr double planck_h = 6.62607015e-34;  // J s
    static constexpr double boltzmann_k = 1.380649e-23;  // J/K
    static constexpr double speed_of_light = 299792458.0;  // m/s
};

/// m_I value of a hyperfine index (0 -> -3.5, 7 -> +3.5).
constexpr double m_value(int index) { return index - 3.5; }

/// "-7/2" .. "+7/2".
std::string m_label(int index);

/// Accepts "+5/2", "-5/2", "5/2", or a decimal such as "2.5".
int m_index_from_label(std::string_view label);

/// Relative strength along one Delta m = +-1 band, linear in the position of
/// the transition within the band. `at_low` applies to the transition that
/// involves |-7/2>, `at_high` to the one that involves |+7/2>.
struct StrengthLaw {
    double at_low;
    double at_high;

    double at_position(int position) const {
        return at_low + (at_high - at_low) * position / 6.0;
    }
};

struct StrengthModel {
    StrengthLaw minus_one{0.25, 0.025};
    StrengthLaw plus_one{0.31, 0.031};
};

/// Strength of the transition |g, ground> -> |e, ground + delta_m> relative
/// to the Delta m = 0 transitions. |delta_m| >= 2 requires the branching
/// extension, in which each extra unit of |delta_m| multiplies by the
/// Delta m = +-1 factor at the same ground state.
double oscillator_strength(int delta_m, int ground, const StrengthModel& model = {},
                           bool include_branching = false);

struct IsotopeComposition {
    double target_fraction = 0.92;
    /// Position of the I = 0 isotope line relative to the optical origin (Hz).
    double impurity_offset = -200e6;
    /// Peak strength of the impurity line per unit impurity fraction, in units
    /// of a Delta m = 0 line carrying the full target population.
    double impurity_strength = 1.0;

    double impurity_fraction() const { return 1.0 - target_fraction; }
    void validate() const;
};

struct LevelConfig {
    double field = 7.0;               // T
    double zeeman_slope = 214e9;      // Hz/T
    double optical_origin = PhysicalConstants::speed_of_light / 1538e-9;  // Hz
    /// Seven spacings between adjacent hyperfine levels, lowest first (Hz).
    std::vector<double> ground_spacings = std::vector<double>(7, 994.7e6);
    std::vector<double> excited_spacings = std::vector<double>(7, 1.0e9);
    StrengthModel strengths{};
};

class LevelScheme {
public:
    using Ladder = std::array<double, kHyperfineStates>;

    LevelScheme(Ladder ground, Ladder excited, double optical_origin, double zeeman_slope,
                double field, StrengthModel strengths = {});

    const Ladder& ground_energies() const { return ground_; }
    const Ladder& excited_energies() const { return excited_; }
    double optical_origin() const { return optical_origin_; }
    double zeeman_slope() const { return zeeman_slope_; }
    double field() const { return field_; }
    const StrengthModel& strengths() const { return strengths_; }

    /// Electronic Zeeman splitting f = slope * field (Hz).
    double electronic_splitting() const { return zeeman_slope_ * field_; }

    /// Ground-state splitting between adjacent levels `index` and `index + 1`.
    double ground_spacing(int index) const { return ground_[index + 1] - ground_[index]; }

    /// Optical detuning of |g, ground> -> |e, excited> from the optical origin.
    double transition_detuning(int ground, int excited) const {
        return excited_[excited] - ground_[ground];
    }

private:
    Ladder ground_;
    Ladder excited_;
    double optical_origin_;
    double zeeman_slope_;
    double field_;
    StrengthModel strengths_;
};

LevelScheme build_level_scheme(const LevelConfig& config = {});

struct OpticalTransition {
    int ground;
    int excited;
    int delta_m;
    /// Detuning from the scheme's optical origin (Hz).
    double frequency;
    double rel_strength;
};

struct TransitionTable {
    std::vector<OpticalTransition> transitions;

    int count(int delta_m) const;
    /// Unweighted mean frequency of the transitions with this delta_m.
    double centroid(int delta_m) const;
    /// First transition connecting the two states, or nullptr.
    const OpticalTransition* find(int ground, int excited) const;
};

TransitionTable transition_table(const LevelScheme& scheme, bool include_branching = false);

}  // namespace spinhole
