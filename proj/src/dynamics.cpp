#include "spinhole/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "spinhole/error.hpp"
#include "spinhole/ode.hpp"

namespace spinhole {

namespace {

constexpr double kHOverK = PhysicalConstants::planck_h / PhysicalConstants::boltzmann_k;

void require_temperature(double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        fail(ErrorCategory::domain, fmt::format("temperature must be positive, got {}", temperature));
    }
}

}  // namespace

void RelaxationParams::validate() const {
    if (!(gamma_d >= 0.0 && gamma_r >= 0.0 && gamma_or >= 0.0)) {
        fail(ErrorCategory::invalid_config, "relaxation coefficients must be non-negative");
    }
    if (gamma_or > 0.0 && !(f > 0.0)) {
        fail(ErrorCategory::invalid_config, "electronic splitting must be positive when the Orbach term is on");
    }
}

double gamma_of_T(const RelaxationParams& params, double temperature) {
    require_temperature(temperature);
    params.validate();
    double rate = params.gamma_d * temperature + params.gamma_r * std::pow(temperature, 9);
    if (params.gamma_or > 0.0) {
        rate += params.gamma_or * params.f * params.f * params.f *
                std::exp(-kHOverK * params.f / temperature);
    }
    return rate;
}

double planck_occupancy(double frequency, double temperature) {
    require_temperature(temperature);
    if (!(frequency > 0.0)) {
        fail(ErrorCategory::domain, fmt::format("phonon frequency must be positive, got {}", frequency));
    }
    return 1.0 / std::expm1(kHOverK * frequency / temperature);
}

PopulationState thermal_equilibrium(const LevelScheme& scheme, double temperature) {
    require_temperature(temperature);
    const auto& energies = scheme.ground_energies();
    PopulationState s;
    double total = 0.0;
    for (int i = 0; i < kHyperfineStates; ++i) {
        s.p[i] = std::exp(-kHOverK * energies[i] / temperature);
        total += s.p[i];
    }
    for (double& x : s.p) x /= total;
    return s;
}

Branching Branching::from_strengths(const StrengthModel& strengths, int pump_band) {
    if (pump_band != 1 && pump_band != -1) {
        fail(ErrorCategory::invalid_config, "pump band must be +1 or -1");
    }
    // Band-averaged strengths of the transitions that share the decay's
    // change in m_I.
    const int sign = pump_band > 0 ? -1 : +1;
    Branching b;
    b.probabilities[0] = 1.0;
    for (int order = 1; order <= 3; ++order) {
        const int absorption_dm = -sign * order;  // transition g -> e with e - g = -(decay shift)
        double sum = 0.0;
        int count = 0;
        for (int g = 0; g < kHyperfineStates; ++g) {
            const int e = g + absorption_dm;
            if (e < 0 || e >= kHyperfineStates) continue;
            sum += oscillator_strength(absorption_dm, g, strengths, true);
            ++count;
        }
        b.probabilities[sign * order] = sum / count;
    }
    double total = 0.0;
    for (const auto& [dm, w] : b.probabilities) total += w;
    for (auto& [dm, w] : b.probabilities) w /= total;
    return b;
}

Branching Branching::diagonal() {
    Branching b;
    b.probabilities[0] = 1.0;
    return b;
}

Branching Branching::mirrored() const {
    Branching b;
    for (const auto& [dm, w] : probabilities) b.probabilities[-dm] = w;
    return b;
}

void Branching::validate() const {
    double total = 0.0;
    for (const auto& [dm, w] : probabilities) {
        if (std::abs(dm) > 3) fail(ErrorCategory::invalid_config, fmt::format("decay shift {} is not modelled", dm));
        if (!(w >= 0.0)) fail(ErrorCategory::invalid_config, "branching probabilities must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        fail(ErrorCategory::invalid_config, fmt::format("branching probabilities sum to {}, not 1", total));
    }
}

std::vector<std::pair<int, double>> Branching::destinations(int excited) const {
    std::vector<std::pair<int, double>> out;
    double total = 0.0;
    for (const auto& [dm, w] : probabilities) {
        const int g = excited + dm;
        if (g < 0 || g >= kHyperfineStates || w == 0.0) continue;
        out.emplace_back(g, w);
        total += w;
    }
    if (out.empty() || total <= 0.0) {
        fail(ErrorCategory::invalid_config,
             fmt::format("no decay channel available from excited {}", m_label(excited)));
    }
    for (auto& [g, w] : out) w /= total;
    return out;
}

PumpConfig PumpConfig::defaults(const LevelScheme& scheme, int band, double rate) {
    return PumpConfig{band, rate, Branching::from_strengths(scheme.strengths(), band)};
}

void PumpConfig::validate() const {
    if (band != 1 && band != -1) fail(ErrorCategory::invalid_config, "pump band must be +1 or -1");
    if (!(rate >= 0.0) || !std::isfinite(rate)) fail(ErrorCategory::invalid_config, "pump rate must be >= 0");
    branching.validate();
}

RateMatrix rate_matrix(const LevelScheme& scheme, double gamma, double temperature,
                       const std::optional<PumpConfig>& pump, const EvolveOptions& options) {
    require_temperature(temperature);
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        fail(ErrorCategory::domain, fmt::format("relaxation rate must be >= 0, got {}", gamma));
    }
    RateMatrix m{};
    const auto& energies = scheme.ground_energies();
    for (int b = 0; b + 1 < kHyperfineStates; ++b) {
        const double down = gamma * options.bond_scale[b];
        const double up = down * std::exp(-kHOverK * (energies[b + 1] - energies[b]) / temperature);
        m[b][b + 1] += down;
        m[b + 1][b + 1] -= down;
        m[b + 1][b] += up;
        m[b][b] -= up;
    }
    if (pump && pump->rate > 0.0) {
        pump->validate();
        for (int g = 0; g < kHyperfineStates; ++g) {
            const int e = g + pump->band;
            if (e < 0 || e >= kHyperfineStates) continue;
            const double excitation = pump->rate * oscillator_strength(pump->band, g, scheme.strengths());
            m[g][g] -= excitation;
            for (const auto& [dest, prob] : pump->branching.destinations(e)) m[dest][g] += excitation * prob;
        }
    }
    return m;
}

Trajectory evolve_populations_at(const PopulationState& state, double gamma, const LevelScheme& scheme,
                                 double temperature, const std::optional<PumpConfig>& pump,
                                 std::span<const double> times, const EvolveOptions& options) {
    state.validate();
    const RateMatrix m = rate_matrix(scheme, gamma, temperature, pump, options);
    auto rhs = [&m](double, std::span<const double> y, std::span<double> dydt) {
        for (int i = 0; i < kHyperfineStates; ++i) {
            double acc = 0.0;
            for (int j = 0; j < kHyperfineStates; ++j) acc += m[i][j] * y[j];
            dydt[i] = acc;
        }
    };
    OdeOptions ode;
    ode.rtol = options.rtol;
    ode.atol = options.atol;
    const OdeSolution sol =
        integrate_dopri(rhs, 0.0, std::vector<double>(state.p.begin(), state.p.end()), times, ode);

    Trajectory traj;
    traj.times = sol.times;
    traj.error_estimate = sol.error_estimate;
    traj.steps = sol.accepted_steps;
    traj.states.reserve(sol.states.size());
    for (const auto& y : sol.states) {
        PopulationState s;
        std::copy(y.begin(), y.end(), s.p.begin());
        traj.states.push_back(s);
    }
    return traj;
}

Trajectory evolve_populations(const PopulationState& state, double gamma, const LevelScheme& scheme,
                              double temperature, const std::optional<PumpConfig>& pump, double duration,
                              const EvolveOptions& options) {
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        fail(ErrorCategory::domain, "duration must be >= 0");
    }
    const int samples = std::max(options.samples, 2);
    std::vector<double> times(samples);
    for (int i = 0; i < samples; ++i) times[i] = duration * i / (samples - 1);
    times.back() = duration;
    if (duration == 0.0) times.assign(1, 0.0);
    return evolve_populations_at(state, gamma, scheme, temperature, pump, times, options);
}

PopulationState simulate_spin_pumping(const LevelScheme& scheme, const PumpConfig& pump, double gamma,
                                      double duration, double temperature, const EvolveOptions& options) {
    pump.validate();
    const PopulationState start = thermal_equilibrium(scheme, temperature);
    return evolve_populations(start, gamma, scheme, temperature, pump, duration, options).final_state();
}

void PhononModel::validate() const {
    require_temperature(temperature);
    if (!(cross_relax_plateau > 0.0)) fail(ErrorCategory::invalid_config, "cross-relaxation plateau must be > 0");
    if (!(zeeman_slope > 0.0)) fail(ErrorCategory::invalid_config, "Zeeman slope must be > 0");
    if (!(electron_cross_relax_rate >= 0.0 && phonon_coupling >= 0.0 && phonon_density_exponent >= 0.0)) {
        fail(ErrorCategory::invalid_config, "phonon model rates must be non-negative");
    }
    if (!(low_field_peak_field > 0.0)) fail(ErrorCategory::invalid_config, "peak field must be > 0");
}

namespace {

/// x^p / (e^x - 1) and its derivative in x.
std::pair<double, double> phonon_density(double x, double p) {
    if (x == 0.0) {
        if (p > 1.0) return {0.0, p == 2.0 ? 1.0 : 0.0};
        if (p == 1.0) return {1.0, -0.5};
        return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    }
    const double em1 = std::expm1(x);
    const double occupancy = 1.0 / em1;
    const double d_occupancy = -(em1 + 1.0) * occupancy * occupancy;
    const double xp = std::pow(x, p);
    return {xp * occupancy, p * std::pow(x, p - 1.0) * occupancy + xp * d_occupancy};
}

double field_to_x(const PhononModel& model) { return kHOverK * model.zeeman_slope / model.temperature; }

}  // namespace

double calibrate_cross_relax_field(const PhononModel& model) {
    model.validate();
    const double peak = model.low_field_peak_field;
    const double dxdb = field_to_x(model);
    const double phonon_slope =
        model.phonon_coupling * phonon_density(dxdb * peak, model.phonon_density_exponent).second * dxdb;
    const double amplitude = model.electron_cross_relax_rate;
    // (A / B0) exp(-B* / B0) rises monotonically for B0 in (0, B*].
    auto balance = [&](double b0) { return amplitude / b0 * std::exp(-peak / b0) - phonon_slope; };
    if (!(phonon_slope > 0.0) || balance(peak) <= 0.0) {
        fail(ErrorCategory::domain,
             fmt::format("no cross-relaxation field scale puts the lifetime maximum at {} T", peak));
    }
    double lo = peak * 1e-6;
    double hi = peak;
    if (balance(lo) >= 0.0) return lo;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (balance(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

LifetimeRates hole_decay_rates(const PhononModel& model, const RelaxationParams& params, double field) {
    model.validate();
    if (!(field >= 0.0) || !std::isfinite(field)) fail(ErrorCategory::domain, "field must be >= 0");
    const double b0 = model.cross_relax_field > 0.0 ? model.cross_relax_field : calibrate_cross_relax_field(model);
    LifetimeRates r{};
    r.phonon = model.phonon_coupling *
               phonon_density(field_to_x(model) * field, model.phonon_density_exponent).first;
    r.electron_cross_relax = model.electron_cross_relax_rate * std::exp(-field / b0);
    if (model.floor_enabled) {
        const double floor = 1.0 / model.cross_relax_plateau;
        r.hyperfine_spin_lattice = std::min(gamma_of_T(params, model.temperature), floor);
        r.hyperfine_cross_relax = floor - r.hyperfine_spin_lattice;
    }
    return r;
}

std::vector<double> hole_lifetime_vs_field(const PhononModel& model, const RelaxationParams& params,
                                           std::span<const double> fields) {
    PhononModel resolved = model;
    if (resolved.cross_relax_field <= 0.0) resolved.cross_relax_field = calibrate_cross_relax_field(model);
    std::vector<double> out;
    out.reserve(fields.size());
    for (double b : fields) out.push_back(1.0 / hole_decay_rates(resolved, params, b).total());
    return out;
}

}  // namespace spinhole
