#include <doctest.h>

#include <cmath>
#include <random>

#include "spinhole/error.hpp"
#include "spinhole/fit_drivers.hpp"
#include "spinhole/least_squares.hpp"

using namespace spinhole;

namespace {

ErrorCategory category_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("no error thrown");
    return ErrorCategory::io;
}

struct LineData {
    std::vector<double> x, y;
};

LineData noisy_line(double a, double b, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    LineData d;
    for (int i = 0; i < 40; ++i) {
        d.x.push_back(0.25 * i);
        d.y.push_back(a + b * d.x.back() + sigma * noise(rng));
    }
    return d;
}

ResidualFunction line_residual(const LineData& d) {
    return [&d](std::span<const double> p) {
        std::vector<double> r(d.x.size());
        for (std::size_t i = 0; i < d.x.size(); ++i) r[i] = d.y[i] - (p[0] + p[1] * d.x[i]);
        return r;
    };
}

std::vector<Parameter> line_params() { return {{"a", 0.0}, {"b", 0.0}}; }

}  // namespace

TEST_CASE("a linear problem is solved in one Gauss-Newton step") {
    const LineData d = noisy_line(1.5, -0.7, 0.2, 3);
    LeastSquaresOptions opts;
    opts.max_iterations = 1;
    opts.compute_intervals = false;
    const FitResult fit = least_squares(line_residual(d), line_params(), opts);

    // Normal equations in closed form.
    const double n = d.x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        sx += d.x[i];
        sy += d.y[i];
        sxx += d.x[i] * d.x[i];
        sxy += d.x[i] * d.y[i];
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double a = (sy - b * sx) / n;
    CHECK(fit.value("a") == doctest::Approx(a).epsilon(1e-10));
    CHECK(fit.value("b") == doctest::Approx(b).epsilon(1e-10));
    CHECK(fit.iterations == 1);
}

TEST_CASE("Rosenbrock converges to its minimum") {
    ResidualFunction rosen = [](std::span<const double> p) {
        return std::vector<double>{10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]};
    };
    const FitResult fit = least_squares(rosen, {{"x", -1.2}, {"y", 1.0}});
    CHECK(fit.converged);
    CHECK(fit.value("x") == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(fit.value("y") == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t i = 1; i < fit.cost_history.size(); ++i) CHECK(fit.cost_history[i] <= fit.cost_history[i - 1]);

    LeastSquaresOptions capped;
    capped.max_iterations = 2;
    const FitResult stopped = least_squares(rosen, {{"x", -1.2}, {"y", 1.0}}, capped);
    CHECK_FALSE(stopped.converged);
    CHECK(stopped.termination == Termination::iteration_cap);
    CHECK(stopped.intervals.empty());
}

TEST_CASE("bounds and fixed parameters") {
    ResidualFunction r = [](std::span<const double> p) { return std::vector<double>{p[0] - 3.0, p[1] - 1.0}; };
    std::vector<Parameter> params{{"x", 0.0, -kUnbounded, 2.0}, {"y", 5.0}};
    params[1].fixed = true;
    const FitResult fit = least_squares(r, params);
    CHECK(fit.converged);
    CHECK(fit.value("x") == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.value("y") == 5.0);
    CHECK(fit.interval("y").low == 5.0);
    CHECK(fit.interval("y").high == 5.0);
    CHECK(fit.interval("x").high_open);

    std::vector<Parameter> outside{{"x", 3.0, -1.0, 1.0}};
    CHECK(category_of([&] { least_squares(r, outside); }) == ErrorCategory::invalid_config);
}

TEST_CASE("one-parameter interval matches the analytic RMSD doubling") {
    const std::vector<double> y{1.0, 2.0, 4.0, 3.5, 2.5, 0.5};
    ResidualFunction r = [&y](std::span<const double> p) {
        std::vector<double> out;
        for (double v : y) out.push_back(v - p[0]);
        return out;
    };
    const FitResult fit = least_squares(r, {{"c", 0.0}});
    double mean = 0.0, var = 0.0;
    for (double v : y) mean += v / y.size();
    for (double v : y) var += (v - mean) * (v - mean) / y.size();
    // rmsd(c)^2 = var + (c - mean)^2, doubled where (c - mean)^2 = 3 var.
    const double half = std::sqrt(3.0 * var);
    CHECK(fit.value("c") == doctest::Approx(mean).epsilon(1e-12));
    CHECK(fit.rmsd == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    const Interval& iv = fit.interval("c");
    CHECK(std::abs(iv.low - (mean - half)) < 1e-3 * half);
    CHECK(std::abs(iv.high - (mean + half)) < 1e-3 * half);
    CHECK_FALSE(iv.low_open);
    CHECK_FALSE(iv.high_open);
}

TEST_CASE("noise-free data give zero-width intervals") {
    const LineData d = noisy_line(1.5, -0.7, 0.0, 1);
    const FitResult fit = least_squares(line_residual(d), line_params());
    CHECK(fit.rmsd < 1e-12);
    for (const auto& iv : fit.intervals) CHECK(iv.high - iv.low == doctest::Approx(0.0));
}

TEST_CASE("intervals shrink with the noise level") {
    double previous = kUnbounded;
    // 10 %, 1 % and 0.1 % of the signal scale.
    for (double sigma : {0.1, 0.01, 0.001}) {
        const LineData d = noisy_line(1.5, -0.7, sigma, 11);
        const FitResult fit = least_squares(line_residual(d), line_params());
        const Interval& iv = fit.interval("b");
        CHECK(iv.contains(fit.value("b")));
        const double width = iv.high - iv.low;
        CHECK(width < previous);
        previous = width;
    }
}

TEST_CASE("fits are bit-reproducible") {
    const LineData d = noisy_line(1.5, -0.7, 0.1, 9);
    const FitResult a = least_squares(line_residual(d), line_params());
    const FitResult b = least_squares(line_residual(d), line_params());
    CHECK(a.values() == b.values());
    CHECK(a.cost_history == b.cost_history);
    for (std::size_t i = 0; i < a.intervals.size(); ++i) {
        CHECK(a.intervals[i].low == b.intervals[i].low);
        CHECK(a.intervals[i].high == b.intervals[i].high);
    }
}

TEST_CASE("report and helpers") {
    const LineData d = noisy_line(1.5, -0.7, 0.1, 5);
    const FitResult fit = least_squares(line_residual(d), line_params());
    const std::string report = format_report(fit);
    CHECK(report.find("a") != std::string::npos);
    CHECK(report.find(termination_name(fit.termination)) != std::string::npos);
    const std::vector<double> r{3.0, 4.0};
    CHECK(rmsd(r) == doctest::Approx(std::sqrt(12.5)));
    CHECK(category_of([&] { fit.value("missing"); }) == ErrorCategory::fit);
}

TEST_CASE("relaxation-law fit round trip") {
    const RelaxationParams truth;
    std::vector<double> temps, rates;
    for (int i = 14; i <= 30; ++i) {
        temps.push_back(i / 10.0);
        rates.push_back(gamma_of_T(truth, temps.back()));
    }
    const Eq1Fit fit = fit_eq1(temps, rates, truth.f);
    CHECK(fit.points_used == 13);
    CHECK(fit.gamma_d == doctest::Approx(truth.gamma_d).epsilon(1e-6));
    CHECK(fit.gamma_or == doctest::Approx(truth.gamma_or).epsilon(1e-6));

    // Relative residuals make the fit invariant to the rate scale.
    std::vector<double> scaled;
    for (double r : rates) scaled.push_back(1e3 * r);
    Eq1FitOptions opts;
    opts.initial_gamma_d = 1.0;
    opts.initial_gamma_or = 1e-21;
    const Eq1Fit big = fit_eq1(temps, scaled, truth.f, opts);
    CHECK(big.gamma_d == doctest::Approx(1e3 * truth.gamma_d).epsilon(1e-6));
    CHECK(big.gamma_or == doctest::Approx(1e3 * truth.gamma_or).epsilon(1e-6));

    // Without an Orbach contribution the fitted coefficient sits at zero.
    RelaxationParams direct_only = truth;
    direct_only.gamma_or = 0.0;
    std::vector<double> direct_rates;
    for (double t : temps) direct_rates.push_back(gamma_of_T(direct_only, t));
    const Eq1Fit no_orbach = fit_eq1(temps, direct_rates, truth.f);
    CHECK(no_orbach.result.interval("gamma_or").contains(0.0));
    CHECK(no_orbach.gamma_d == doctest::Approx(truth.gamma_d).epsilon(1e-6));

    const std::vector<double> two_t{1.4, 1.5}, two_r{1e-3, 1.1e-3};
    CHECK(category_of([&] { fit_eq1(two_t, two_r, truth.f); }) == ErrorCategory::invalid_config);
    const std::vector<double> bad_r{1e-3, -1.0};
    CHECK(category_of([&] { fit_eq1(two_t, bad_r, truth.f); }) == ErrorCategory::domain);
}

TEST_CASE("relaxation time-series fit") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel model = default_absorption_model(scheme, PopulationState::uniform());
    const auto grid = linear_grid(-1.5e9, 1.5e9, 121);
    const double gamma = 2e-3;
    const std::vector<double> times{0.0, 100.0, 300.0, 600.0, 1200.0};
    const RelaxationSeriesOptions opts;
    EvolveOptions precise;
    precise.rtol = 1e-12;
    precise.atol = 1e-16;
    const auto traj = evolve_populations_at(opts.initial_state, gamma, scheme, opts.temperature, std::nullopt, times, precise);

    auto series = [&](double noise, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n(0.0, noise);
        std::vector<SpectrumGrid> out;
        for (const auto& state : traj.states) {
            AbsorptionModel m = model;
            m.populations = state;
            SpectrumGrid s = synthesize_absorption(m, grid);
            const double peak = s.max_value();
            for (double& v : s.values) v += noise * peak * n(rng) / std::max(noise, 1e-300);
            out.push_back(std::move(s));
        }
        return out;
    };

    SUBCASE("noise-free") {
        const auto spectra = series(0.0, 1);
        const RelaxationFit fit = fit_relaxation_timeseries(times, spectra, scheme, model, opts);
        CHECK(fit.gamma == doctest::Approx(gamma).epsilon(1e-6));
        CHECK(fit.amplitude_scale == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("1 % noise") {
        const auto spectra = series(0.01, 2);
        const RelaxationFit fit = fit_relaxation_timeseries(times, spectra, scheme, model, opts);
        CHECK(fit.gamma == doctest::Approx(gamma).epsilon(0.05));
        CHECK(fit.result.interval("gamma").contains(fit.gamma));
    }
    SUBCASE("static spectra are not identifiable") {
        const auto spectra = series(0.0, 1);
        const std::vector<SpectrumGrid> same{spectra[0], spectra[0], spectra[0]};
        const std::vector<double> t3{0.0, 1.0, 2.0};
        CHECK(category_of([&] { fit_relaxation_timeseries(t3, same, scheme, model, opts); }) == ErrorCategory::fit);
    }
    SUBCASE("inputs are checked") {
        const auto spectra = series(0.0, 1);
        const std::vector<SpectrumGrid> two{spectra[0], spectra[1]};
        const std::vector<double> t2{0.0, 100.0};
        CHECK(category_of([&] { fit_relaxation_timeseries(t2, two, scheme, model, opts); }) ==
              ErrorCategory::invalid_config);
        std::vector<SpectrumGrid> mixed(spectra.begin(), spectra.begin() + 3);
        mixed[1].frequencies[0] -= 1.0;
        const std::vector<double> t3{0.0, 100.0, 300.0};
        CHECK(category_of([&] { fit_relaxation_timeseries(t3, mixed, scheme, model, opts); }) ==
              ErrorCategory::invalid_config);
    }
}

TEST_CASE("population fractions from the Delta m = -1 band") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel base = default_absorption_model(scheme, PopulationState::uniform());
    const auto grid = linear_grid(-2e9, 0.5e9, 501);
    auto spectrum_of = [&](const PopulationState& s) {
        AbsorptionModel m = base;
        m.populations = s;
        return synthesize_absorption(m, grid);
    };

    SUBCASE("95 % polarized") {
        const PopulationFit fit = fit_population_fractions(spectrum_of(PopulationState::polarized(7, 0.95)), scheme, base);
        CHECK(fit.state.p[7] == doctest::Approx(0.95).epsilon(1e-6));
        CHECK(fit.points_used > 10);
        CHECK(fit.points_used < 501);
    }
    SUBCASE("thermal with seven free states") {
        const PopulationState thermal = thermal_equilibrium(scheme, 1.4);
        PopulationFitOptions opts;
        opts.free_states = {1, 2, 3, 4, 5, 6, 7};
        const PopulationFit fit = fit_population_fractions(spectrum_of(thermal), scheme, base, opts);
        for (int i = 0; i < kHyperfineStates; ++i) CHECK(fit.state.p[i] == doctest::Approx(thermal.p[i]).epsilon(1e-5));
    }
    SUBCASE("depleted +7/2") {
        PopulationState depleted{};
        for (int i = 0; i < 7; ++i) depleted.p[i] = 1.0 / 7.0;
        const PopulationFit fit = fit_population_fractions(spectrum_of(depleted), scheme, base);
        CHECK(std::abs(fit.state.p[7]) < 1e-8);
    }
    SUBCASE("the band must be covered") {
        const auto narrow = linear_grid(-0.5e9, 0.5e9, 101);
        AbsorptionModel m = base;
        const SpectrumGrid s = synthesize_absorption(m, narrow);
        CHECK(category_of([&] { fit_population_fractions(s, scheme, base); }) == ErrorCategory::domain);
        PopulationFitOptions all;
        all.free_states = {0, 1, 2, 3, 4, 5, 6, 7};
        CHECK(category_of([&] { fit_population_fractions(spectrum_of(PopulationState::uniform()), scheme, base, all); }) ==
              ErrorCategory::invalid_config);
    }
}
