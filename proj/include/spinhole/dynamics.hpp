#pragma once

// Ground-state hyperfine population dynamics: spin-lattice relaxation along
// the m_I ladder, optical spin pumping, and the field dependence of the
// spectral-hole lifetime.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spinhole/levels.hpp"
#include "spinhole/population.hpp"

namespace spinhole {

/// Orbach coefficient used as the default. With f in Hz and rates in 1/s it
/// puts the Orbach/direct crossover near 2.0 K at 7 T, which gives the
/// low-temperature plateau and the steep rise above 1.8 K.
inline constexpr double kDefaultOrbachCoefficient = 2.2e-24;  // 1/(s Hz^3)

/// The Orbach coefficient as it is usually quoted. In these units it makes
/// the Orbach term negligible (< 3e-5 1/s) everywhere below 2.6 K.
inline constexpr double kQuotedOrbachCoefficient = 8e-30;

struct RelaxationParams {
    double gamma_d = 9e-4;                        // 1/(s K)
    double gamma_r = 0.0;                         // 1/(s K^9)
    double gamma_or = kDefaultOrbachCoefficient;  // 1/(s Hz^3)
    double f = 214e9 * 7.0;                       // Hz, electronic splitting

    void validate() const;
};

/// gamma(T) = gamma_d T + gamma_r T^9 + gamma_or f^3 exp(-h f / k T).
double gamma_of_T(const RelaxationParams& params, double temperature);

/// Mean phonon occupation 1 / (exp(h f / k T) - 1).
double planck_occupancy(double frequency, double temperature);

PopulationState thermal_equilibrium(const LevelScheme& scheme, double temperature);

/// Decay probabilities from an excited hyperfine level, keyed by
/// m_I(ground) - m_I(excited). Destinations that fall off the ladder are
/// dropped and the remainder renormalized.
struct Branching {
    std::map<int, double> probabilities;

    /// Weights proportional to the Delta m = 0, -1, -2, -3 strengths
    /// (band averages), for pumping on the Delta m = +1 band. For band -1 the
    /// mirror image {0, +1, +2, +3} is used.
    static Branching from_strengths(const StrengthModel& strengths, int pump_band = +1);
    /// Everything decays back with Delta m = 0.
    static Branching diagonal();

    Branching mirrored() const;
    void validate() const;
    /// (ground index, probability) for decay from `excited`.
    std::vector<std::pair<int, double>> destinations(int excited) const;
};

struct PumpConfig {
    int band = +1;      // pumped Delta m class
    double rate = 0.0;  // 1/s per unit relative strength
    Branching branching;

    static PumpConfig defaults(const LevelScheme& scheme, int band, double rate);
    void validate() const;
};

struct EvolveOptions {
    double rtol = 1e-9;
    double atol = 1e-14;
    /// Per-bond multipliers of gamma for the bonds (i, i + 1).
    std::array<double, kHyperfineStates - 1> bond_scale{1, 1, 1, 1, 1, 1, 1};
    /// Number of equally spaced trajectory samples including both ends.
    int samples = 2;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PopulationState> states;
    double error_estimate = 0.0;
    long steps = 0;

    const PopulationState& final_state() const { return states.back(); }
};

/// Rate matrix of the relaxation (and optional pump) process; column j holds
/// the rates out of state j.
using RateMatrix = std::array<std::array<double, kHyperfineStates>, kHyperfineStates>;
RateMatrix rate_matrix(const LevelScheme& scheme, double gamma, double temperature,
                       const std::optional<PumpConfig>& pump, const EvolveOptions& options = {});

Trajectory evolve_populations(const PopulationState& state, double gamma, const LevelScheme& scheme,
                              double temperature, const std::optional<PumpConfig>& pump, double duration,
                              const EvolveOptions& options = {});

/// Same process sampled at arbitrary non-decreasing times >= 0.
Trajectory evolve_populations_at(const PopulationState& state, double gamma, const LevelScheme& scheme,
                                 double temperature, const std::optional<PumpConfig>& pump,
                                 std::span<const double> times, const EvolveOptions& options = {});

/// Pump from thermal equilibrium for `duration` and return the final state.
PopulationState simulate_spin_pumping(const LevelScheme& scheme, const PumpConfig& pump, double gamma,
                                      double duration, double temperature = 1.4,
                                      const EvolveOptions& options = {});

struct PhononModel {
    double zeeman_slope = 214e9;       // Hz/T
    double temperature = 1.4;          // K
    double cross_relax_plateau = 70.0; // s, high-field hole lifetime
    double low_field_peak_field = 0.1; // T
    /// Electron-spin cross-relaxation rate at zero field (1/s).
    double electron_cross_relax_rate = 10.0;
    /// Field scale of the exp(-B / B0) cross-relaxation decay. Non-positive
    /// means "solve for B0 so the lifetime peaks at low_field_peak_field".
    double cross_relax_field = 0.0;
    /// Direct-process coupling: rate = coupling * x^exponent * n(x), x = h f / k T.
    double phonon_coupling = 1.4;
    double phonon_density_exponent = 3.0;
    bool floor_enabled = true;

    void validate() const;
};

/// B0 placing the local lifetime maximum at `low_field_peak_field`.
double calibrate_cross_relax_field(const PhononModel& model);

struct LifetimeRates {
    double phonon;
    double electron_cross_relax;
    double hyperfine_spin_lattice;
    double hyperfine_cross_relax;
    double total() const { return phonon + electron_cross_relax + hyperfine_spin_lattice + hyperfine_cross_relax; }
};

/// Rate decomposition at one field. The hyperfine spin-lattice rate
/// gamma(T) of `params` is counted as part of the plateau, so the high-field
/// lifetime stays at `cross_relax_plateau` whatever gamma(T) is.
LifetimeRates hole_decay_rates(const PhononModel& model, const RelaxationParams& params, double field);

std::vector<double> hole_lifetime_vs_field(const PhononModel& model, const RelaxationParams& params,
                                           std::span<const double> fields);

}  // namespace spinhole
