#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "spinhole/error.hpp"
#include "spinhole/faddeeva.hpp"
#include "spinhole/spectrum.hpp"

using namespace spinhole;
using std::numbers::pi;

namespace {

// Reference values of w(z) from an independent implementation (SciPy wofz).
struct FaddeevaCase {
    std::complex<double> z, w;
};
const FaddeevaCase kFaddeevaTable[] = {
    {{0.5, 0.5}, {0.5331567079121748, 0.2304882313844585}},
    {{2.0, 0.1}, {0.040201398161451296, 0.3315826873345632}},
    {{0.01, 3.0}, {0.17899956275650425, 0.0005437181206731325}},
    {{6.0, 0.001}, {1.6375340027605402e-05, 0.0953962061132771}},
    {{10.0, 10.0}, {0.028279467454232453, 0.0281384332763369}},
    {{-1.5, 0.3}, {0.17386534625254568, -0.39166525260814483}},
    {{3.0, -0.5}, {-0.037440117100424296, 0.19302847942731746}},
    {{0.001, 0.0}, {0.9999990000005, 0.0011283784148430353}},
    {{25.0, 1.0}, {0.0009034249050849368, 0.022549456792260194}},
};

// Dawson's integral by composite Simpson quadrature of exp(t^2 - x^2) on [0, x].
double dawson_quadrature(double x) {
    const int n = 20000;
    const double h = x / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::exp(t * t - x * x);
    }
    return s * h / 3.0;
}

double trapezoid(auto&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) s += f(a + i * h);
    return s * h;
}

AbsorptionModel single_line_model(double gaussian, double lorentzian) {
    AbsorptionModel m;
    m.table.transitions.push_back({7, 7, 0, 0.0, 1.0});
    m.populations = PopulationState::single(7);
    m.lineshape = Lineshape{gaussian, lorentzian};
    m.isotopes.target_fraction = 1.0;
    m.peak_calibration = 70.0;
    return m;
}

}  // namespace

TEST_CASE("Faddeeva function against reference values") {
    for (const auto& c : kFaddeevaTable) {
        const std::complex<double> w = faddeeva(c.z);
        CHECK(std::abs(w - c.w) <= 1e-13 * std::abs(c.w));
    }
}

TEST_CASE("Dawson integral against quadrature") {
    for (double x : {0.1, 0.5, 1.0, 2.0, 3.5}) {
        CHECK(dawson(x) == doctest::Approx(dawson_quadrature(x)).epsilon(1e-10));
        CHECK(dawson(-x) == -dawson(x));
    }
}

TEST_CASE("Voigt limits match closed forms") {
    const double fwhm = 150e6;
    const Lineshape lorentz{0.0, fwhm};
    const Lineshape gauss{fwhm, 0.0};
    const double g = fwhm / 2.0;
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    for (double x = -1e9; x <= 1e9; x += 37e6) {
        const double lor = g / pi / (x * x + g * g);
        const double gau = std::exp(-x * x / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * pi));
        CHECK(std::abs(voigt(x, lorentz).real() - lor) <= 1e-10 * (g / pi / (g * g)));
        CHECK(std::abs(voigt(x, gauss).real() - gau) <= 1e-10 / (sigma * std::sqrt(2 * pi)));
        CHECK(voigt(x, lorentz).imag() == doctest::Approx(x / pi / (x * x + g * g)).epsilon(1e-12));
    }
    // Near-Lorentzian and near-Gaussian Voigts converge to the limits.
    CHECK(voigt(3e7, Lineshape{1e-3, fwhm}).real() == doctest::Approx(voigt(3e7, lorentz).real()).epsilon(1e-9));
    CHECK(voigt(3e7, Lineshape{fwhm, 1e-3}).real() == doctest::Approx(voigt(3e7, gauss).real()).epsilon(1e-9));
}

TEST_CASE("Voigt profiles have unit area") {
    SUBCASE("Gaussian over +-50 FWHM") {
        const Lineshape s{150e6, 0.0};
        const double area = trapezoid([&](double x) { return voigt(x, s).real(); }, -50 * 150e6, 50 * 150e6, 200000);
        CHECK(area == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("default Voigt with analytic Lorentzian tail beyond +-50 FWHM") {
        const Lineshape s = default_lineshape();
        const double span = 50 * s.fwhm();
        const double inner = trapezoid([&](double x) { return voigt(x, s).real(); }, -span, span, 400000);
        // Far tails are Lorentzian: 2 * integral_X^inf (g/pi)/x^2 dx = 2 g / (pi X).
        const double tail = 2.0 * (s.lorentzian_fwhm / 2.0) / (pi * span);
        CHECK(inner + tail == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("Voigt properties") {
    const Lineshape s = default_lineshape();
    CHECK(s.gaussian_fwhm == s.lorentzian_fwhm);
    CHECK(s.fwhm() == doctest::Approx(150e6).epsilon(1e-9));
    for (double x = 0; x < 2e9; x += 13e6) {
        CHECK(voigt(x, s).real() >= 0.0);
        CHECK(voigt(-x, s).imag() == doctest::Approx(-voigt(x, s).imag()).epsilon(1e-12));
    }
    CHECK_THROWS_AS(Lineshape{}.validate(), Error);
}

TEST_CASE("dB and neper conversion") {
    CHECK(kDbPerNeper == doctest::Approx(10.0 * std::log10(std::exp(1.0))).epsilon(1e-15));
    for (double a : {0.1, 1.0, 70.0}) CHECK(nepers_to_db(db_to_nepers(a)) == doctest::Approx(a).epsilon(1e-15));
}

TEST_CASE("polarized spectrum calibration") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel polarized = default_absorption_model(scheme, PopulationState::polarized(7, 0.95));
    const double centre = scheme.transition_detuning(7, 7);
    CHECK(susceptibility_at(polarized, centre).real() == doctest::Approx(70.0).epsilon(1e-12));
    const SpectrumGrid s = synthesize_absorption(polarized, linear_grid(-2e9, 2e9, 4001));
    CHECK(s.max_value() == doctest::Approx(70.0).epsilon(4.0 / 70.0));

    // Per-transition enhancement of the pumped line over the unpolarized ensemble.
    const AbsorptionModel uniform = default_absorption_model(scheme, PopulationState::uniform());
    const double ratio = transition_peak_absorption(polarized, 7, 7) / transition_peak_absorption(uniform, 7, 7);
    CHECK(ratio == doctest::Approx(0.95 / 0.125).epsilon(1e-12));
}

TEST_CASE("synthesis is linear in populations") {
    const LevelScheme scheme = build_level_scheme();
    const auto grid = linear_grid(-1.5e9, 1.5e9, 301);
    PopulationState a{}, b{};
    a.p[2] = 0.3;
    a.p[5] = 0.7;
    b.p[0] = 0.6;
    b.p[7] = 0.4;
    AbsorptionModel m = default_absorption_model(scheme, a);
    m.isotopes.target_fraction = 1.0;  // the impurity line is not linear in the target populations
    const auto sa = synthesize_absorption(m, grid);
    m.populations = b;
    const auto sb = synthesize_absorption(m, grid);
    PopulationState c{};
    for (int i = 0; i < kHyperfineStates; ++i) c.p[i] = 0.5 * (a.p[i] + b.p[i]);
    m.populations = c;
    const auto sc = synthesize_absorption(m, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(sc.values[i] == doctest::Approx(0.5 * (sa.values[i] + sb.values[i])).epsilon(1e-12));
    }
}

TEST_CASE("empty target ensemble leaves only the impurity line") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel m = default_absorption_model(scheme, PopulationState{});
    const auto grid = linear_grid(-1e9, 1e9, 101);
    const auto s = synthesize_absorption(m, grid);
    const double unit = m.peak_calibration / voigt(0.0, m.lineshape).real();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expected = unit * 0.08 * voigt(grid[i] - m.isotopes.impurity_offset, m.lineshape).real();
        CHECK(s.values[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    AbsorptionModel bad = m;
    bad.populations.p[0] = 0.5;
    CHECK_THROWS_AS(synthesize_absorption(bad, grid), Error);
}

TEST_CASE("Kramers-Kronig transform reproduces the analytic dispersion") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel m = default_absorption_model(scheme, PopulationState::polarized(7, 0.95));
    const auto grid = linear_grid(-40e9, 40e9, 16001);
    const ComplexSpectrum c = synthesize_susceptibility(m, grid);
    const SpectrumGrid numeric = kramers_kronig_dispersion(c.absorption());
    double scale = 0.0;
    for (auto v : c.values) scale = std::max(scale, std::abs(v.imag()));
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid[i]) > 3e9) continue;
        worst = std::max(worst, std::abs(numeric.values[i] - c.values[i].imag()) / scale);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("AM and PM responses of an empty absorber") {
    const std::vector<double> mods = linear_grid(1e6, 2e9, 50);
    ComplexSpectrum empty{linear_grid(-5e9, 5e9, 11), std::vector<std::complex<double>>(11)};
    ModulationOptions opts;
    opts.carrier_amplitude = 0.7;
    opts.sideband_amplitude = 0.2;
    const auto am = am_response(empty, 0.0, mods, 0.6, opts);
    const auto pm = pm_response(empty, 0.0, mods, 0.6, opts);
    for (std::size_t i = 0; i < mods.size(); ++i) {
        CHECK(am.response.values[i] == doctest::Approx(2 * 0.7 * 0.2).epsilon(1e-15));
        CHECK(pm.response.values[i] == 0.0);
    }
    CHECK_FALSE(am.carrier_in_band);
}

TEST_CASE("mirrored carrier positions give identical beat responses") {
    const AbsorptionModel line = single_line_model(0.0, 100e6);
    const std::vector<double> mods = linear_grid(10e6, 2e9, 200);
    const auto below = am_response(line, -0.7e9, mods);
    const auto above = am_response(line, +0.7e9, mods);
    const auto pm_below = pm_response(line, -0.7e9, mods);
    const auto pm_above = pm_response(line, +0.7e9, mods);
    for (std::size_t i = 0; i < mods.size(); ++i) {
        CHECK(std::abs(below.response.values[i] - above.response.values[i]) < 1e-9);
        CHECK(std::abs(pm_below.response.values[i] - pm_above.response.values[i]) < 1e-9);
    }
}

TEST_CASE("AM response dips at a strongly absorbing line") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel m = default_absorption_model(scheme, PopulationState::polarized(7, 0.95));
    const double centre = scheme.transition_detuning(7, 7);
    // Far enough out that the lower sideband sees no absorption.
    const double carrier = centre - 2.5e9;
    const std::vector<double> mods{0.5e9, 2.5e9};
    const auto r = am_response(m, carrier, mods);
    // Off resonance both sidebands beat at full strength; on the line the upper
    // sideband is extinguished (42 dB) and only the lower one remains.
    CHECK(r.response.values[0] == doctest::Approx(2.0).epsilon(0.02));
    CHECK(r.response.values[1] < r.response.values[0]);
    const double t_centre = std::exp(-0.5 * db_to_nepers(susceptibility_at(m, centre).real()) * m.path_length);
    CHECK(r.response.values[1] == doctest::Approx(1.0).epsilon(2 * t_centre));
    CHECK_FALSE(r.carrier_in_band);
    CHECK(am_response(m, centre, mods).carrier_in_band);
}

TEST_CASE("PM response carries a spectral hole signature") {
    // Broad Lorentzian with a narrow Lorentzian hole at +300 MHz.
    const auto grid = linear_grid(-6e9, 6e9, 24001);
    auto coefficient = [](double nu, double depth) {
        const std::complex<double> broad = 40.0 * 400e6 * std::complex<double>(0, 1) / (nu + std::complex<double>(0, 400e6));
        const std::complex<double> hole =
            depth * 5e6 * std::complex<double>(0, 1) / (nu - 300e6 + std::complex<double>(0, 5e6));
        return broad - hole;
    };
    ComplexSpectrum with{grid, {}}, without{grid, {}};
    for (double f : grid) {
        with.values.push_back(coefficient(f, 20.0));
        without.values.push_back(coefficient(f, 0.0));
    }
    const double carrier = -1.2e9;
    const auto mods = linear_grid(1.2e9, 1.8e9, 601);
    const auto a = pm_response(with, carrier, mods, 0.6);
    const auto b = pm_response(without, carrier, mods, 0.6);
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < mods.size(); ++i) {
        const double d = std::abs(a.response.values[i] - b.response.values[i]);
        if (d > best) best = d, arg = i;
    }
    CHECK(best > 1e-3);
    CHECK(mods[arg] == doctest::Approx(1.5e9).epsilon(5e-3));
}

TEST_CASE("spectral basis reproduces direct synthesis") {
    const LevelScheme scheme = build_level_scheme();
    const AbsorptionModel m = default_absorption_model(scheme, PopulationState::polarized(3, 0.6));
    const auto grid = linear_grid(-1.2e9, 1.2e9, 97);
    const auto direct = synthesize_susceptibility(m, grid);
    const auto basis = spectral_basis(m, grid).evaluate(m.populations);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(direct.values[i] - basis.values[i]) < 1e-12 * 70.0);
        CHECK(std::abs(susceptibility_at(m, grid[i]) - direct.values[i]) < 1e-12 * 70.0);
    }
}

TEST_CASE("grids and interpolation") {
    CHECK_THROWS_AS(linear_grid(1.0, 0.0, 5), Error);
    SpectrumGrid g{{0.0, 1.0, 2.0}, {0.0, 10.0, 20.0}};
    CHECK(g.interpolate(1.5) == doctest::Approx(15.0));
    CHECK(g.interpolate(-1.0) == 0.0);
    SpectrumGrid bad{{0.0, 0.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(bad.validate(), Error);
}
