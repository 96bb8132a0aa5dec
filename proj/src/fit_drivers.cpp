#include "spinhole/fit_drivers.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

Eq1Fit fit_eq1(std::span<const double> temperatures, std::span<const double> rates, double f,
               const Eq1FitOptions& options) {
    if (temperatures.size() != rates.size()) fail(ErrorCategory::invalid_config, "temperature and rate counts differ");
    if (!(f > 0.0)) fail(ErrorCategory::invalid_config, "electronic splitting must be > 0");
    std::vector<double> t, g;
    for (std::size_t i = 0; i < temperatures.size(); ++i) {
        if (temperatures[i] > options.max_temperature) continue;
        if (!(temperatures[i] > 0.0) || !(rates[i] > 0.0)) {
            fail(ErrorCategory::domain, "temperatures and rates must be > 0");
        }
        t.push_back(temperatures[i]);
        g.push_back(rates[i]);
    }
    if (t.size() < 3) {
        fail(ErrorCategory::invalid_config,
             fmt::format("need >= 3 points at or below {} K, got {}", options.max_temperature, t.size()));
    }
    ResidualFunction residual = [&](std::span<const double> p) {
        const RelaxationParams rp{p[0], options.gamma_r, p[1], f};
        std::vector<double> r(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) r[i] = (g[i] - gamma_of_T(rp, t[i])) / g[i];
        return r;
    };
    std::vector<Parameter> params{
        {"gamma_d", options.initial_gamma_d, 0.0, kUnbounded, false, std::max(options.initial_gamma_d, 1e-12)},
        {"gamma_or", options.initial_gamma_or, 0.0, kUnbounded, false,
         options.initial_gamma_or > 0.0 ? options.initial_gamma_or : kDefaultOrbachCoefficient},
    };
    FitResult fit = least_squares(residual, params);
    if (!fit.converged) fail(ErrorCategory::fit, fmt::format("relaxation-law fit did not converge\n{}", format_report(fit)));
    return Eq1Fit{fit.value("gamma_d"), fit.value("gamma_or"), static_cast<int>(t.size()), std::move(fit)};
}

namespace {

void require_shared_grid(std::span<const SpectrumGrid> spectra) {
    for (const auto& s : spectra) {
        s.validate();
        if (s.frequencies != spectra.front().frequencies) {
            fail(ErrorCategory::invalid_config, "spectra in a series must share one frequency grid");
        }
    }
}

}  // namespace

RelaxationFit fit_relaxation_timeseries(std::span<const double> times, std::span<const SpectrumGrid> spectra,
                                        const LevelScheme& scheme, const AbsorptionModel& model,
                                        const RelaxationSeriesOptions& options) {
    if (times.size() != spectra.size()) fail(ErrorCategory::invalid_config, "time and spectrum counts differ");
    if (spectra.size() < 3) fail(ErrorCategory::invalid_config, fmt::format("need >= 3 spectra, got {}", spectra.size()));
    require_shared_grid(spectra);
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] >= times[i - 1]) || !(times[0] >= 0.0)) {
            fail(ErrorCategory::invalid_config, "spectrum times must be non-negative and non-decreasing");
        }
    }
    double peak = 0.0, spread = 0.0;
    for (const auto& s : spectra) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            peak = std::max(peak, std::abs(s.values[i]));
            spread = std::max(spread, std::abs(s.values[i] - spectra.front().values[i]));
        }
    }
    if (!(peak > 0.0) || spread <= 1e-12 * peak) {
        fail(ErrorCategory::fit, "spectra do not evolve; the relaxation rate is not identifiable");
    }

    const SpectralBasis basis = spectral_basis(model, spectra.front().frequencies);
    const std::size_t n = basis.frequencies.size();
    std::array<std::vector<double>, kHyperfineStates> columns;
    for (int m = 0; m < kHyperfineStates; ++m) {
        columns[m].resize(n);
        for (std::size_t i = 0; i < n; ++i) columns[m][i] = basis.per_ground[m][i].real();
    }
    std::vector<double> impurity(n);
    for (std::size_t i = 0; i < n; ++i) impurity[i] = basis.impurity[i].real();

    EvolveOptions evolve;
    evolve.rtol = 1e-12;
    evolve.atol = 1e-16;
    const std::vector<double> t(times.begin(), times.end());
    ResidualFunction residual = [&](std::span<const double> p) {
        const Trajectory traj = evolve_populations_at(options.initial_state, p[0], scheme, options.temperature,
                                                      options.pump, t, evolve);
        std::vector<double> r;
        r.reserve(n * t.size());
        for (std::size_t k = 0; k < t.size(); ++k) {
            const auto& pop = traj.states[k].p;
            for (std::size_t i = 0; i < n; ++i) {
                double v = impurity[i];
                for (int m = 0; m < kHyperfineStates; ++m) v += pop[m] * columns[m][i];
                r.push_back((spectra[k].values[i] - p[1] * v) / peak);
            }
        }
        return r;
    };
    std::vector<Parameter> params{
        {"gamma", options.initial_gamma, 0.0, kUnbounded, false, options.initial_gamma},
        {"amplitude_scale", 1.0, 0.0, kUnbounded, false, 1.0},
    };
    FitResult fit = least_squares(residual, params);
    if (!fit.converged) fail(ErrorCategory::fit, fmt::format("relaxation series fit did not converge\n{}", format_report(fit)));
    return RelaxationFit{fit.value("gamma"), fit.value("amplitude_scale"), std::move(fit)};
}

PopulationFit fit_population_fractions(const SpectrumGrid& spectrum, const LevelScheme& scheme,
                                       const AbsorptionModel& model, const PopulationFitOptions& options) {
    spectrum.validate();
    if (options.free_states.empty() || static_cast<int>(options.free_states.size()) >= kHyperfineStates) {
        fail(ErrorCategory::invalid_config, "between 1 and 7 states must be free");
    }
    std::array<bool, kHyperfineStates> is_free{};
    for (int s : options.free_states) {
        if (s < 0 || s >= kHyperfineStates || is_free[s]) fail(ErrorCategory::invalid_config, "bad free-state list");
        is_free[s] = true;
    }
    const TransitionTable band_table = transition_table(scheme);
    double lo = kUnbounded, hi = -kUnbounded;
    for (const auto& t : band_table.transitions) {
        if (t.delta_m != -1) continue;
        lo = std::min(lo, t.frequency);
        hi = std::max(hi, t.frequency);
    }
    if (spectrum.frequencies.front() > lo || spectrum.frequencies.back() < hi) {
        fail(ErrorCategory::domain, fmt::format("spectrum [{:.6g}, {:.6g}] Hz does not cover the Delta m = -1 band "
                                                "[{:.6g}, {:.6g}] Hz",
                                                spectrum.frequencies.front(), spectrum.frequencies.back(), lo, hi));
    }
    const double margin = options.band_margin * model.lineshape.fwhm();
    std::vector<double> freqs, data;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (spectrum.frequencies[i] < lo - margin || spectrum.frequencies[i] > hi + margin) continue;
        freqs.push_back(spectrum.frequencies[i]);
        data.push_back(spectrum.values[i]);
    }

    const SpectralBasis basis = spectral_basis(model, freqs);
    const double peak = std::max(1e-300, *std::max_element(data.begin(), data.end(),
                                                           [](double a, double b) { return std::abs(a) < std::abs(b); }));
    const double shared_count = kHyperfineStates - static_cast<double>(options.free_states.size());
    auto state_of = [&](std::span<const double> p) {
        PopulationState s;
        double used = 0.0;
        for (std::size_t k = 0; k < options.free_states.size(); ++k) {
            s.p[options.free_states[k]] = p[k];
            used += p[k];
        }
        for (int m = 0; m < kHyperfineStates; ++m) {
            if (!is_free[m]) s.p[m] = (1.0 - used) / shared_count;
        }
        return s;
    };
    ResidualFunction residual = [&](std::span<const double> p) {
        const ComplexSpectrum c = basis.evaluate(state_of(p));
        std::vector<double> r(freqs.size());
        for (std::size_t i = 0; i < freqs.size(); ++i) r[i] = (data[i] - c.values[i].real()) / std::abs(peak);
        return r;
    };
    std::vector<Parameter> params;
    for (int s : options.free_states) {
        params.push_back({fmt::format("p{}", m_label(s)), 1.0 / kHyperfineStates, 0.0, 1.0, false, 0.1});
    }
    FitResult fit = least_squares(residual, params);
    if (!fit.converged) fail(ErrorCategory::fit, fmt::format("population fit did not converge\n{}", format_report(fit)));
    PopulationFit out;
    out.state = state_of(fit.values());
    out.points_used = static_cast<int>(freqs.size());
    out.result = std::move(fit);
    return out;
}

}  // namespace spinhole
