#pragma once

// Raman-echo decay and envelope models.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spinhole/least_squares.hpp"
#include "spinhole/levels.hpp"

namespace spinhole {

struct EchoDecayModel {
    double t2 = 1.3;      // s, e^-1 time of the amplitude vs total delay
    double mims_x = 1.0;  // stretch exponent, (0, 3]

    void validate() const;
};

/// exp(-(tau / t2)^x); tau is the total delay.
double echo_amplitude(double tau, const EchoDecayModel& model);

/// Time-bandwidth conventions for a Gaussian detuning distribution of
/// frequency FWHM dnu and an echo envelope of time FWHM dt.
enum class EnvelopeConvention {
    transform_limited,  // dt * dnu = 2 ln2 / pi
    echo_field,         // dt * dnu = 4 ln2 / pi, envelope is the echo field amplitude
    echo_intensity,     // dt * dnu = 2 sqrt2 ln2 / pi, envelope is |field|^2
};

EnvelopeConvention parse_envelope_convention(std::string_view name);
std::string_view envelope_convention_name(EnvelopeConvention convention);
double time_bandwidth_product(EnvelopeConvention convention);
double envelope_from_linewidth(double linewidth_fwhm, EnvelopeConvention convention);
double linewidth_from_envelope(double envelope_fwhm, EnvelopeConvention convention);

struct EchoSequence {
    double pulse_separation = 30e-3;  // s, pi/2 to pi
    double window = 40e-6;            // s, full width of the sampled window around the echo
    int samples = 801;
    bool readout_on = true;           // second Raman field present during readout
};

struct EchoSimulationOptions {
    bool monte_carlo = false;
    std::uint64_t seed = 1;
    /// Envelope quantity returned: field amplitude or intensity.
    bool intensity = false;
};

struct EchoEnvelope {
    std::vector<double> times;      // s, from the pi/2 pulse
    std::vector<double> amplitude;  // normalized to the rephased value
    double echo_time = 0.0;
    double coherence_frequency = 0.0;  // Hz, hyperfine splitting of the Lambda pair
    double sampling_error = 0.0;       // estimated absolute error of the packet sum
    std::vector<std::string> warnings;
};

/// Ideal pi/2 - pi sequence on an ensemble of Lambda systems whose hyperfine
/// detunings are Gaussian with the given FWHM. Packets are Gauss-Hermite nodes
/// unless Monte-Carlo sampling is requested.
EchoEnvelope simulate_raman_echo(const LevelScheme& scheme, double inhomogeneous_fwhm,
                                 const EchoSequence& sequence, int packet_count,
                                 const EchoSimulationOptions& options = {});

/// Full width at half maximum of a sampled single-peaked trace, with linear
/// interpolation between samples.
double trace_fwhm(std::span<const double> times, std::span<const double> values);

/// Gauss-Hermite nodes and weights for the weight exp(-x^2).
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct EchoFit {
    EchoDecayModel model;
    double amplitude = 1.0;  // fitted A(0)
    FitResult result;
};

/// Fits log A = log A0 - (tau / t2)^x. Requires >= 5 points with tau > 0 and
/// A > 0.
EchoFit fit_echo_decay(std::span<const double> taus, std::span<const double> amplitudes,
                       const std::optional<EchoDecayModel>& initial = std::nullopt);

}  // namespace spinhole
