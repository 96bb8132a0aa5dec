#pragma once

// Fits of the relaxation-rate law, population time series and
// single-spectrum population estimates.

#include <optional>
#include <span>
#include <vector>

#include "spinhole/dynamics.hpp"
#include "spinhole/least_squares.hpp"
#include "spinhole/spectrum.hpp"

namespace spinhole {

struct Eq1FitOptions {
    double max_temperature = 2.6;  // K, points above are excluded
    double gamma_r = 0.0;          // held fixed
    double initial_gamma_d = 1e-3;
    double initial_gamma_or = kDefaultOrbachCoefficient;
};

struct Eq1Fit {
    double gamma_d;
    double gamma_or;
    int points_used;
    FitResult result;
};

/// Fits gamma_d and gamma_or with relative residuals (data - model) / data.
Eq1Fit fit_eq1(std::span<const double> temperatures, std::span<const double> rates, double f,
               const Eq1FitOptions& options = {});

struct RelaxationSeriesOptions {
    double temperature = 1.4;
    double initial_gamma = 1e-3;
    std::optional<PumpConfig> pump;
    /// The fitted state at t = 0 is fixed; the spectra carry a free overall scale.
    PopulationState initial_state = PopulationState::polarized(7, 0.95);
};

struct RelaxationFit {
    double gamma;
    double amplitude_scale;
    FitResult result;
};

/// Fits gamma (and an overall amplitude scale) to absorption spectra taken at
/// `times`. All spectra must share one frequency grid.
RelaxationFit fit_relaxation_timeseries(std::span<const double> times, std::span<const SpectrumGrid> spectra,
                                        const LevelScheme& scheme, const AbsorptionModel& model,
                                        const RelaxationSeriesOptions& options = {});

struct PopulationFitOptions {
    /// States fitted individually; the others share the remaining population.
    std::vector<int> free_states{kHyperfineStates - 1};
    /// Grid points within this many line FWHM of the Delta m = -1 band are used.
    double band_margin = 1.0;
};

struct PopulationFit {
    PopulationState state;
    FitResult result;
    int points_used = 0;
};

/// Estimates populations from the Delta m = -1 band of one absorption
/// spectrum. `model` supplies the lineshape, calibration and isotopes; its
/// populations are ignored.
PopulationFit fit_population_fractions(const SpectrumGrid& spectrum, const LevelScheme& scheme,
                                       const AbsorptionModel& model, const PopulationFitOptions& options = {});

}  // namespace spinhole
