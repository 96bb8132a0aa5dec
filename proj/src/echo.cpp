#include "spinhole/echo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

void EchoDecayModel::validate() const {
    if (!(t2 > 0.0) || !std::isfinite(t2)) fail(ErrorCategory::invalid_config, fmt::format("t2 must be > 0, got {}", t2));
    if (!(mims_x > 0.0 && mims_x <= 3.0)) {
        fail(ErrorCategory::invalid_config, fmt::format("Mims exponent must be in (0, 3], got {}", mims_x));
    }
}

double echo_amplitude(double tau, const EchoDecayModel& model) {
    model.validate();
    if (!(tau >= 0.0)) fail(ErrorCategory::domain, fmt::format("delay must be >= 0, got {}", tau));
    return std::exp(-std::pow(tau / model.t2, model.mims_x));
}

EnvelopeConvention parse_envelope_convention(std::string_view name) {
    if (name == "transform_limited" || name == "amplitude_gaussian") return EnvelopeConvention::transform_limited;
    if (name == "echo_field") return EnvelopeConvention::echo_field;
    if (name == "echo_intensity") return EnvelopeConvention::echo_intensity;
    fail(ErrorCategory::invalid_config, fmt::format("unknown envelope convention '{}'", name));
}

std::string_view envelope_convention_name(EnvelopeConvention convention) {
    switch (convention) {
        case EnvelopeConvention::transform_limited: return "transform_limited";
        case EnvelopeConvention::echo_field: return "echo_field";
        case EnvelopeConvention::echo_intensity: return "echo_intensity";
    }
    return "?";
}

double time_bandwidth_product(EnvelopeConvention convention) {
    using std::numbers::ln2;
    using std::numbers::pi;
    switch (convention) {
        case EnvelopeConvention::transform_limited: return 2.0 * ln2 / pi;
        case EnvelopeConvention::echo_field: return 4.0 * ln2 / pi;
        case EnvelopeConvention::echo_intensity: return 2.0 * std::numbers::sqrt2 * ln2 / pi;
    }
    fail(ErrorCategory::invalid_config, "unknown envelope convention");
}

double envelope_from_linewidth(double linewidth_fwhm, EnvelopeConvention convention) {
    if (!(linewidth_fwhm > 0.0)) fail(ErrorCategory::domain, "linewidth must be > 0");
    return time_bandwidth_product(convention) / linewidth_fwhm;
}

double linewidth_from_envelope(double envelope_fwhm, EnvelopeConvention convention) {
    if (!(envelope_fwhm > 0.0)) fail(ErrorCategory::domain, "envelope width must be > 0");
    return time_bandwidth_product(convention) / envelope_fwhm;
}

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) fail(ErrorCategory::invalid_config, "Gauss-Hermite order must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    nodes.resize(n);
    weights.resize(n);
    const double mass = std::sqrt(std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        nodes[i] = solver.eigenvalues()(i);
        const double v = solver.eigenvectors()(0, i);
        weights[i] = mass * v * v;
    }
}

EchoEnvelope simulate_raman_echo(const LevelScheme& scheme, double inhomogeneous_fwhm,
                                 const EchoSequence& sequence, int packet_count,
                                 const EchoSimulationOptions& options) {
    if (!(inhomogeneous_fwhm >= 0.0)) fail(ErrorCategory::domain, "inhomogeneous width must be >= 0");
    if (packet_count < 100) fail(ErrorCategory::invalid_config, fmt::format("need >= 100 packets, got {}", packet_count));
    if (!(sequence.pulse_separation > 0.0) || !(sequence.window > 0.0) || sequence.samples < 3) {
        fail(ErrorCategory::invalid_config, "pulse separation and window must be > 0 with >= 3 samples");
    }
    if (sequence.window / 2.0 >= sequence.pulse_separation) {
        fail(ErrorCategory::invalid_config, "sampling window overlaps the rephasing pulse");
    }

    const double sigma = inhomogeneous_fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    std::vector<double> detuning(packet_count), weight(packet_count);
    if (options.monte_carlo) {
        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < packet_count; ++i) {
            detuning[i] = 2.0 * std::numbers::pi * sigma * normal(rng);
            weight[i] = 1.0 / packet_count;
        }
    } else {
        std::vector<double> x, w;
        gauss_hermite(packet_count, x, w);
        for (int i = 0; i < packet_count; ++i) {
            detuning[i] = 2.0 * std::numbers::pi * sigma * std::numbers::sqrt2 * x[i];
            weight[i] = w[i] / std::sqrt(std::numbers::pi);
        }
    }

    EchoEnvelope env;
    env.coherence_frequency = scheme.ground_spacing(kHyperfineStates - 2);
    env.echo_time = 2.0 * sequence.pulse_separation;
    env.sampling_error = options.monte_carlo ? 1.0 / std::sqrt(static_cast<double>(packet_count)) : 0.0;
    if (env.sampling_error > 0.05) {
        env.warnings.push_back(fmt::format("{} random packets give an estimated sampling error of {:.3g}",
                                           packet_count, env.sampling_error));
    }

    const double t_pi = sequence.pulse_separation;
    for (int s = 0; s < sequence.samples; ++s) {
        const double t = env.echo_time + sequence.window * (static_cast<double>(s) / (sequence.samples - 1) - 0.5);
        std::complex<double> sum = 0.0;
        if (sequence.readout_on) {
            for (int i = 0; i < packet_count; ++i) {
                // The pi pulse conjugates the coherence accumulated before it.
                const double phase = -detuning[i] * t_pi + detuning[i] * (t - t_pi);
                sum += weight[i] * std::polar(1.0, phase);
            }
        }
        const double field = std::abs(sum);
        env.times.push_back(t);
        env.amplitude.push_back(options.intensity ? field * field : field);
    }
    return env;
}

double trace_fwhm(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size() || times.size() < 3) fail(ErrorCategory::invalid_config, "trace too short");
    const auto peak_it = std::max_element(values.begin(), values.end());
    const std::size_t peak = peak_it - values.begin();
    const double half = *peak_it / 2.0;
    if (!(half > 0.0)) fail(ErrorCategory::numerical, "trace has no positive peak");
    std::size_t i = peak;
    while (i > 0 && values[i - 1] > half) --i;
    std::size_t j = peak;
    while (j + 1 < values.size() && values[j + 1] > half) ++j;
    if (i == 0 || j + 1 == values.size()) fail(ErrorCategory::numerical, "half maximum lies outside the trace");
    auto cross = [&](std::size_t a, std::size_t b) {
        return times[a] + (half - values[a]) * (times[b] - times[a]) / (values[b] - values[a]);
    };
    return cross(j, j + 1) - cross(i - 1, i);
}

EchoFit fit_echo_decay(std::span<const double> taus, std::span<const double> amplitudes,
                       const std::optional<EchoDecayModel>& initial) {
    if (taus.size() != amplitudes.size()) fail(ErrorCategory::invalid_config, "delay and amplitude counts differ");
    if (taus.size() < 5) fail(ErrorCategory::invalid_config, fmt::format("need >= 5 points, got {}", taus.size()));
    std::vector<double> log_a;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0)) fail(ErrorCategory::domain, "delays must be > 0");
        if (!(amplitudes[i] > 0.0)) fail(ErrorCategory::domain, "amplitudes must be > 0");
        log_a.push_back(std::log(amplitudes[i]));
    }

    EchoDecayModel guess;
    double a0 = 1.0;
    if (initial) {
        guess = *initial;
    } else {
        // Largest amplitude sets the normalization; t2 where it has fallen by e.
        a0 = *std::max_element(amplitudes.begin(), amplitudes.end());
        guess.t2 = taus.back();
        for (std::size_t i = 0; i < taus.size(); ++i) {
            if (amplitudes[i] <= a0 / std::numbers::e) {
                guess.t2 = taus[i];
                break;
            }
        }
        guess.mims_x = 1.0;
    }
    guess.validate();

    const std::vector<double> tau(taus.begin(), taus.end());
    ResidualFunction residual = [&tau, &log_a](std::span<const double> p) {
        std::vector<double> r(tau.size());
        for (std::size_t i = 0; i < tau.size(); ++i) r[i] = log_a[i] - (p[0] - std::pow(tau[i] / p[1], p[2]));
        return r;
    };
    std::vector<Parameter> params{
        {"log_amplitude", std::log(a0), -kUnbounded, kUnbounded, false, 1.0},
        {"t2", guess.t2, 1e-12 * guess.t2, kUnbounded, false, guess.t2},
        {"mims_x", guess.mims_x, 1e-3, 3.0, false, 1.0},
    };
    FitResult fit = least_squares(residual, params);
    if (!fit.converged) {
        fail(ErrorCategory::fit, fmt::format("echo decay fit did not converge\n{}", format_report(fit)));
    }
    EchoFit out;
    out.model = EchoDecayModel{fit.value("t2"), fit.value("mims_x")};
    out.amplitude = std::exp(fit.value("log_amplitude"));
    out.result = std::move(fit);
    return out;
}

}  // namespace spinhole
