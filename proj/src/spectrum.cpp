#include "spinhole/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <fmt/format.h>

#include "spinhole/error.hpp"
#include "spinhole/faddeeva.hpp"

namespace spinhole {

namespace {

constexpr double kSigmaPerFwhm = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))

double profile_fwhm(const Lineshape& shape) {
    const double peak = voigt(0.0, shape).real();
    double lo = 0.0;
    double hi = shape.gaussian_fwhm + shape.lorentzian_fwhm;
    while (voigt(hi, shape).real() > 0.5 * peak) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (voigt(mid, shape).real() > 0.5 * peak ? lo : hi) = mid;
    }
    return lo + hi;  // twice the half width
}

}  // namespace

void Lineshape::validate() const {
    if (!(gaussian_fwhm >= 0.0) || !(lorentzian_fwhm >= 0.0) || !std::isfinite(gaussian_fwhm) ||
        !std::isfinite(lorentzian_fwhm)) {
        fail(ErrorCategory::invalid_config, "line widths must be finite and non-negative");
    }
    if (gaussian_fwhm == 0.0 && lorentzian_fwhm == 0.0) {
        fail(ErrorCategory::invalid_config, "line shape needs a non-zero width");
    }
}

Lineshape Lineshape::equal_components(double total_fwhm) {
    if (!(total_fwhm > 0.0)) fail(ErrorCategory::invalid_config, "total FWHM must be positive");
    // The combined width is homogeneous of degree one in the component widths.
    static const double unit = profile_fwhm(Lineshape{1.0, 1.0});
    const double component = total_fwhm / unit;
    return Lineshape{component, component};
}

double Lineshape::fwhm() const {
    validate();
    return profile_fwhm(*this);
}

Lineshape default_lineshape() { return Lineshape::equal_components(150e6); }

std::complex<double> voigt(double detuning, const Lineshape& shape) {
    const double hwhm_l = 0.5 * shape.lorentzian_fwhm;
    if (shape.gaussian_fwhm == 0.0) {
        const double d = std::numbers::pi * (detuning * detuning + hwhm_l * hwhm_l);
        return {hwhm_l / d, detuning / d};
    }
    const double sigma = shape.gaussian_fwhm * kSigmaPerFwhm;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    const double u = detuning / (sigma * std::numbers::sqrt2);
    if (hwhm_l == 0.0) {
        // Real part in closed form; the partner is Dawson's integral.
        return {norm * std::exp(-u * u), norm * 2.0 * std::numbers::inv_sqrtpi * dawson(u)};
    }
    return norm * faddeeva({u, hwhm_l / (sigma * std::numbers::sqrt2)});
}

void SpectrumGrid::validate() const {
    if (frequencies.size() != values.size()) {
        fail(ErrorCategory::invalid_state, "spectrum frequency and value arrays differ in length");
    }
    for (std::size_t i = 1; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > frequencies[i - 1])) {
            fail(ErrorCategory::invalid_state,
                 fmt::format("spectrum frequencies not strictly increasing at row {}", i));
        }
    }
}

double SpectrumGrid::max_value() const {
    if (values.empty()) fail(ErrorCategory::invalid_state, "empty spectrum");
    return *std::max_element(values.begin(), values.end());
}

namespace {

template <class T>
T interpolate_on(const std::vector<double>& x, const std::vector<T>& y, double at) {
    if (x.empty() || at < x.front() || at > x.back()) return T{};
    auto it = std::upper_bound(x.begin(), x.end(), at);
    if (it == x.end()) return y.back();
    const auto i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return y.front();
    const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

}  // namespace

double SpectrumGrid::interpolate(double frequency) const {
    return interpolate_on(frequencies, values, frequency);
}

SpectrumGrid ComplexSpectrum::absorption() const {
    SpectrumGrid out{frequencies, {}};
    out.values.reserve(values.size());
    for (auto v : values) out.values.push_back(v.real());
    return out;
}

SpectrumGrid ComplexSpectrum::dispersion() const {
    SpectrumGrid out{frequencies, {}};
    out.values.reserve(values.size());
    for (auto v : values) out.values.push_back(v.imag());
    return out;
}

std::complex<double> ComplexSpectrum::interpolate(double frequency) const {
    return interpolate_on(frequencies, values, frequency);
}

std::vector<double> linear_grid(double start, double stop, std::size_t points) {
    if (points < 2 || !(stop > start)) {
        fail(ErrorCategory::invalid_config, "grid needs at least two points and stop > start");
    }
    std::vector<double> grid(points);
    const double step = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) grid[i] = start + step * static_cast<double>(i);
    grid.back() = stop;
    return grid;
}

void AbsorptionModel::validate() const {
    lineshape.validate();
    isotopes.validate();
    if (!(peak_calibration > 0.0)) fail(ErrorCategory::invalid_config, "peak calibration must be positive");
    if (!(path_length > 0.0)) fail(ErrorCategory::invalid_config, "path length must be positive");
    const bool empty = std::all_of(populations.p.begin(), populations.p.end(),
                                   [](double x) { return x == 0.0; });
    if (!empty) populations.validate();
}

AbsorptionModel default_absorption_model(const LevelScheme& scheme,
                                         const PopulationState& populations) {
    AbsorptionModel model;
    model.table = transition_table(scheme);
    model.populations = populations;
    model.lineshape = default_lineshape();
    return model;
}

namespace {

/// Scale turning the unit-area profile into a unit-peak one.
double peak_normalization(const Lineshape& shape) { return 1.0 / voigt(0.0, shape).real(); }

}  // namespace

std::vector<std::complex<double>> SpectralBasis::combine(
    const std::array<double, kHyperfineStates>& weights) const {
    std::vector<std::complex<double>> out(frequencies.size());
    for (int m = 0; m < kHyperfineStates; ++m) {
        if (weights[m] == 0.0) continue;
        const auto& column = per_ground[m];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[m] * column[i];
    }
    return out;
}

ComplexSpectrum SpectralBasis::evaluate(const PopulationState& populations) const {
    ComplexSpectrum out{frequencies, combine(populations.p)};
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += impurity[i];
    return out;
}

SpectralBasis spectral_basis(const AbsorptionModel& model, std::span<const double> frequencies) {
    model.lineshape.validate();
    model.isotopes.validate();
    SpectralBasis basis;
    basis.frequencies.assign(frequencies.begin(), frequencies.end());
    const std::size_t n = basis.frequencies.size();
    for (auto& column : basis.per_ground) column.assign(n, {});
    basis.impurity.assign(n, {});

    const double unit = peak_normalization(model.lineshape) * model.peak_calibration;
    const double target = unit * model.isotopes.target_fraction;
    for (const auto& t : model.table.transitions) {
        auto& column = basis.per_ground[t.ground];
        const double weight = target * t.rel_strength;
        for (std::size_t i = 0; i < n; ++i) {
            column[i] += weight * voigt(basis.frequencies[i] - t.frequency, model.lineshape);
        }
    }
    const double impurity = unit * model.isotopes.impurity_fraction() * model.isotopes.impurity_strength;
    if (impurity > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            basis.impurity[i] =
                impurity * voigt(basis.frequencies[i] - model.isotopes.impurity_offset, model.lineshape);
        }
    }
    return basis;
}

ComplexSpectrum synthesize_susceptibility(const AbsorptionModel& model,
                                          std::span<const double> frequencies) {
    model.validate();
    return spectral_basis(model, frequencies).evaluate(model.populations);
}

SpectrumGrid synthesize_absorption(const AbsorptionModel& model, std::span<const double> frequencies) {
    return synthesize_susceptibility(model, frequencies).absorption();
}

std::complex<double> susceptibility_at(const AbsorptionModel& model, double frequency) {
    const double unit = peak_normalization(model.lineshape) * model.peak_calibration;
    std::complex<double> sum = 0.0;
    for (const auto& t : model.table.transitions) {
        const double p = model.populations.p[t.ground];
        if (p == 0.0) continue;
        sum += p * t.rel_strength * voigt(frequency - t.frequency, model.lineshape);
    }
    sum *= unit * model.isotopes.target_fraction;
    sum += unit * model.isotopes.impurity_fraction() * model.isotopes.impurity_strength *
           voigt(frequency - model.isotopes.impurity_offset, model.lineshape);
    return sum;
}

double transition_peak_absorption(const AbsorptionModel& model, int ground, int excited) {
    const auto* t = model.table.find(ground, excited);
    if (t == nullptr) {
        fail(ErrorCategory::domain,
             fmt::format("no transition {} -> {} in table", m_label(ground), m_label(excited)));
    }
    return model.peak_calibration * model.isotopes.target_fraction * model.populations.p[ground] *
           t->rel_strength;
}

SpectrumGrid kramers_kronig_dispersion(const SpectrumGrid& absorption) {
    absorption.validate();
    const auto& x = absorption.frequencies;
    const auto& a = absorption.values;
    const std::size_t n = x.size();
    if (n < 3) fail(ErrorCategory::invalid_state, "Hilbert transform needs at least three points");

    // Local slope for the removable singularity at t = nu.
    std::vector<double> slope(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
        slope[i] = (a[hi] - a[lo]) / (x[hi] - x[lo]);
    }

    SpectrumGrid out{x, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        auto integrand = [&](std::size_t j) {
            return j == i ? -slope[i] : (a[j] - a[i]) / (x[i] - x[j]);
        };
        double sum = 0.0;
        double prev = integrand(0);
        for (std::size_t j = 1; j < n; ++j) {
            const double cur = integrand(j);
            sum += 0.5 * (prev + cur) * (x[j] - x[j - 1]);
            prev = cur;
        }
        // Principal value of 1 / (nu - t) over the grid span.
        double log_term = 0.0;
        if (i != 0 && i + 1 != n) log_term = std::log((x[i] - x.front()) / (x.back() - x[i]));
        out.values[i] = (sum + a[i] * log_term) / std::numbers::pi;
    }
    return out;
}

namespace {

using Coefficient = std::function<std::complex<double>(double)>;

ModulationResponse beat_response(const Coefficient& alpha_db, double carrier,
                                 std::span<const double> modulation, double path_length,
                                 const ModulationOptions& options, double lower_sign) {
    if (!(path_length > 0.0)) fail(ErrorCategory::invalid_config, "path length must be positive");
    auto transmission = [&](double nu) {
        const std::complex<double> kappa = alpha_db(nu) / kDbPerNeper;
        return std::exp(-0.5 * kappa * path_length);
    };
    const std::complex<double> tc = transmission(carrier);
    const double carrier_alpha = alpha_db(carrier).real();
    double max_alpha = carrier_alpha;

    ModulationResponse out;
    out.response.frequencies.assign(modulation.begin(), modulation.end());
    out.response.values.reserve(modulation.size());
    const double scale = options.carrier_amplitude * options.sideband_amplitude;
    for (double fm : modulation) {
        max_alpha = std::max({max_alpha, alpha_db(carrier + fm).real(), alpha_db(carrier - fm).real()});
        const std::complex<double> upper = transmission(carrier + fm) * std::conj(tc);
        const std::complex<double> lower = tc * std::conj(transmission(carrier - fm));
        out.response.values.push_back(scale * std::abs(upper + lower_sign * lower));
    }
    out.carrier_in_band = max_alpha > 0.0 && carrier_alpha > options.in_band_fraction * max_alpha;
    return out;
}

Coefficient grid_coefficient(const ComplexSpectrum& spectrum) {
    return [&spectrum](double nu) { return spectrum.interpolate(nu); };
}

ComplexSpectrum with_numerical_dispersion(const SpectrumGrid& alpha) {
    const SpectrumGrid disp = kramers_kronig_dispersion(alpha);
    ComplexSpectrum out{alpha.frequencies, {}};
    out.values.reserve(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) out.values.emplace_back(alpha.values[i], disp.values[i]);
    return out;
}

Coefficient model_coefficient(const AbsorptionModel& model) {
    model.validate();
    return [&model](double nu) { return susceptibility_at(model, nu); };
}

}  // namespace

ModulationResponse am_response(const ComplexSpectrum& spectrum, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options) {
    return beat_response(grid_coefficient(spectrum), carrier_detuning, modulation_frequencies,
                         path_length, options, +1.0);
}

ModulationResponse am_response(const SpectrumGrid& alpha, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options) {
    const ComplexSpectrum full = with_numerical_dispersion(alpha);
    return am_response(full, carrier_detuning, modulation_frequencies, path_length, options);
}

ModulationResponse am_response(const AbsorptionModel& model, double carrier_detuning,
                               std::span<const double> modulation_frequencies,
                               const ModulationOptions& options) {
    return beat_response(model_coefficient(model), carrier_detuning, modulation_frequencies,
                         model.path_length, options, +1.0);
}

ModulationResponse pm_response(const ComplexSpectrum& spectrum, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options) {
    return beat_response(grid_coefficient(spectrum), carrier_detuning, modulation_frequencies,
                         path_length, options, -1.0);
}

ModulationResponse pm_response(const SpectrumGrid& alpha, double carrier_detuning,
                               std::span<const double> modulation_frequencies, double path_length,
                               const ModulationOptions& options) {
    const ComplexSpectrum full = with_numerical_dispersion(alpha);
    return pm_response(full, carrier_detuning, modulation_frequencies, path_length, options);
}

ModulationResponse pm_response(const AbsorptionModel& model, double carrier_detuning,
                               std::span<const double> modulation_frequencies,
                               const ModulationOptions& options) {
    return beat_response(model_coefficient(model), carrier_detuning, modulation_frequencies,
                         model.path_length, options, -1.0);
}

}  // namespace spinhole
