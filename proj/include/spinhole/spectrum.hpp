#pragma once

// Inhomogeneously broadened absorption/dispersion synthesis and the
// carrier-sideband beat responses measured by AM and PM spectroscopy.

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "spinhole/levels.hpp"
#include "spinhole/population.hpp"

namespace spinhole {

struct Lineshape {
    double gaussian_fwhm = 0.0;    // Hz
    double lorentzian_fwhm = 0.0;  // Hz

    /// Gaussian and Lorentzian components of equal FWHM, sized so that the
    /// combined profile has FWHM `total_fwhm`.
    static Lineshape equal_components(double total_fwhm);

    /// FWHM of the combined profile, located numerically.
    double fwhm() const;
    void validate() const;
};

/// 150 MHz Voigt with equal Gaussian and Lorentzian FWHM.
Lineshape default_lineshape();

/// Unit-area Voigt profile at `detuning`: real part is the absorption
/// profile, imaginary part its Hilbert-transform partner (dispersion).
std::complex<double> voigt(double detuning, const Lineshape& shape);

inline constexpr double kDbPerNeper = 4.3429448190325182;  // 10 log10(e)
inline double db_to_nepers(double db) { return db / kDbPerNeper; }
inline double nepers_to_db(double nepers) { return nepers * kDbPerNeper; }

struct SpectrumGrid {
    std::vector<double> frequencies;  // Hz, strictly increasing
    std::vector<double> values;

    void validate() const;
    std::size_t size() const { return frequencies.size(); }
    double max_value() const;
    /// Linear interpolation; zero outside the grid.
    double interpolate(double frequency) const;
};

/// Absorption (real) and its dispersion partner (imaginary) in dB/cm.
struct ComplexSpectrum {
    std::vector<double> frequencies;
    std::vector<std::complex<double>> values;

    SpectrumGrid absorption() const;
    SpectrumGrid dispersion() const;
    std::complex<double> interpolate(double frequency) const;
};

std::vector<double> linear_grid(double start, double stop, std::size_t points);

/// Absorption scale in dB/cm per unit (population x strength). Set so that
/// the total absorption at the |+7/2> -> |+7/2> line centre of a 95 % |+7/2>
/// state is 70 dB/cm with the default scheme, lineshape and isotope mix.
inline constexpr double kDefaultPeakCalibration = 75.986452736210424;

inline constexpr double kDefaultPathLength = 0.6;  // cm, double pass through 3 mm

struct AbsorptionModel {
    TransitionTable table;
    PopulationState populations;
    Lineshape lineshape;
    double peak_calibration = kDefaultPeakCalibration;
    IsotopeComposition isotopes;
    double path_length = kDefaultPathLength;

    void validate() const;
};

AbsorptionModel default_absorption_model(const LevelScheme& scheme,
                                         const PopulationState& populations);

/// Complex line profiles on a grid, one per ground state, plus the impurity
/// line. The target-isotope part is linear in the populations.
struct SpectralBasis {
    std::vector<double> frequencies;
    std::array<std::vector<std::complex<double>>, kHyperfineStates> per_ground;
    std::vector<std::complex<double>> impurity;

    /// sum_m weights[m] * per_ground[m], without the impurity line.
    std::vector<std::complex<double>> combine(const std::array<double, kHyperfineStates>& weights) const;
    ComplexSpectrum evaluate(const PopulationState& populations) const;
};

SpectralBasis spectral_basis(const AbsorptionModel& model, std::span<const double> frequencies);

/// Absorption coefficient (dB/cm) on the given grid. Populations must be
/// normalized, or all zero (empty target ensemble).
SpectrumGrid synthesize_absorption(const AbsorptionModel& model, std::span<const double> frequencies);

/// Absorption plus its analytic dispersion partner (dB/cm).
ComplexSpectrum synthesize_susceptibility(const AbsorptionModel& model,
                                          std::span<const double> frequencies);

/// Complex absorption coefficient (dB/cm) at one frequency.
std::complex<double> susceptibility_at(const AbsorptionModel& model, double frequency);

/// Contribution of a single transition at its own line centre (dB/cm).
double transition_peak_absorption(const AbsorptionModel& model, int ground, int excited);

/// Principal-value Hilbert transform of a sampled absorption profile,
/// (1/pi) P int a(t) / (nu - t) dt, by singularity-subtracted trapezoid
/// quadrature over the grid.
SpectrumGrid kramers_kronig_dispersion(const SpectrumGrid& absorption);

struct ModulationOptions {
    double carrier_amplitude = 1.0;
    double sideband_amplitude = 1.0;
    /// Carrier counts as in-band when its absorption exceeds this fraction of
    /// the largest absorption seen by any sideband.
    double in_band_fraction = 0.05;
};

struct ModulationResponse {
    SpectrumGrid response;  // frequencies are modulation frequencies
    bool carrier_in_band = false;
};

/// Beat amplitude at each modulation frequency for amplitude modulation,
/// |t(c + f) t*(c) + t(c) t*(c - f)| scaled by carrier and sideband amplitude.
ModulationResponse am_response(const ComplexSpectrum& spectrum, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options = {});
/// Phase is taken from the numerical Hilbert transform of `alpha`.
ModulationResponse am_response(const SpectrumGrid& alpha, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options = {});
/// Exact line shapes, no grid interpolation.
ModulationResponse am_response(const AbsorptionModel& model, double carrier_detuning,
                               std::span<const double> modulation_frequencies,
                               const ModulationOptions& options = {});

/// Phase modulation: the lower sideband enters with opposite sign, so an
/// empty absorber gives no beat.
ModulationResponse pm_response(const ComplexSpectrum& spectrum, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options = {});
ModulationResponse pm_response(const SpectrumGrid& alpha, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options = {});
ModulationResponse pm_response(const AbsorptionModel& model, double carrier_detuning,
                               std::span<const double> modulation_frequencies,
                               const ModulationOptions& options = {});

}  // namespace spinhole
