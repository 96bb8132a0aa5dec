#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <string>

#include "spinhole/dynamics.hpp"
#include "spinhole/echo.hpp"
#include "spinhole/error.hpp"
#include "spinhole/fit_drivers.hpp"
#include "spinhole/holeburn.hpp"
#include "spinhole/spectrum.hpp"

namespace py = pybind11;
using namespace spinhole;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) { return std::vector<double>(a.data(), a.data() + a.size()); }

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

py::dict fit_dict(const FitResult& r) {
    py::dict params, intervals;
    for (std::size_t i = 0; i < r.params.size(); ++i) {
        params[py::str(r.params[i].name)] = r.params[i].value;
        if (i < r.intervals.size()) {
            intervals[py::str(r.params[i].name)] = py::make_tuple(r.intervals[i].low, r.intervals[i].high);
        }
    }
    py::dict d;
    d["params"] = params;
    d["intervals"] = intervals;
    d["rmsd"] = r.rmsd;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["report"] = format_report(r);
    return d;
}

PopulationState state_from(const std::vector<double>& p) {
    if (p.size() != kHyperfineStates) throw py::value_error("populations need 8 entries");
    PopulationState s;
    std::copy(p.begin(), p.end(), s.p.begin());
    return s;
}

std::vector<double> state_list(const PopulationState& s) { return {s.p.begin(), s.p.end()}; }

}  // namespace

PYBIND11_MODULE(spinhole, m) {
    m.doc() = "High-field hyperfine spectroscopy simulation and fitting";

    static py::exception<Error> error(m, "SpinholeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (std::string(category_name(e.category())) + ": " + e.what()).c_str());
        }
    });

    m.def("m_label", &m_label);

    py::class_<LevelScheme>(m, "LevelScheme")
        .def(py::init([](double field, double zeeman_slope, double ground_spacing, double excited_spacing) {
                 LevelConfig c;
                 c.field = field;
                 c.zeeman_slope = zeeman_slope;
                 c.ground_spacings.assign(kHyperfineStates - 1, ground_spacing);
                 c.excited_spacings.assign(kHyperfineStates - 1, excited_spacing);
                 return build_level_scheme(c);
             }),
             py::arg("field") = 7.0, py::arg("zeeman_slope") = 214e9, py::arg("ground_spacing") = 994.7e6,
             py::arg("excited_spacing") = 1.0e9)
        .def_property_readonly("ground_energies", [](const LevelScheme& s) { return std::vector<double>(s.ground_energies().begin(), s.ground_energies().end()); })
        .def_property_readonly("excited_energies", [](const LevelScheme& s) { return std::vector<double>(s.excited_energies().begin(), s.excited_energies().end()); })
        .def_property_readonly("electronic_splitting", &LevelScheme::electronic_splitting)
        .def("transition_detuning", &LevelScheme::transition_detuning, py::arg("ground"), py::arg("excited"))
        .def("transitions", [](const LevelScheme& s, bool branching) {
                 py::list out;
                 for (const auto& t : transition_table(s, branching).transitions) {
                     out.append(py::make_tuple(t.ground, t.excited, t.delta_m, t.frequency, t.rel_strength));
                 }
                 return out;
             },
             py::arg("include_branching") = false, "(ground, excited, delta_m, frequency, strength) tuples");

    m.def("uniform_populations", [] { return state_list(PopulationState::uniform()); });
    m.def("polarized_populations", [](int target, double fraction) { return state_list(PopulationState::polarized(target, fraction)); },
          py::arg("target") = 7, py::arg("fraction") = 0.95);
    m.def("thermal_equilibrium", [](const LevelScheme& s, double t) { return state_list(thermal_equilibrium(s, t)); },
          py::arg("scheme"), py::arg("temperature"));

    m.def("voigt", [](const Array& detuning, double gaussian_fwhm, double lorentzian_fwhm) {
              const Lineshape shape{gaussian_fwhm, lorentzian_fwhm};
              py::array_t<std::complex<double>> out(detuning.size());
              auto o = out.mutable_unchecked<1>();
              for (py::ssize_t i = 0; i < detuning.size(); ++i) o(i) = voigt(detuning.data()[i], shape);
              return out;
          },
          py::arg("detuning"), py::arg("gaussian_fwhm"), py::arg("lorentzian_fwhm"));

    m.def("synthesize_absorption",
          [](const LevelScheme& s, const std::vector<double>& pops, const Array& freqs, double total_fwhm,
             std::optional<double> calibration) {
              AbsorptionModel model = default_absorption_model(s, state_from(pops));
              model.lineshape = Lineshape::equal_components(total_fwhm);
              if (calibration) model.peak_calibration = *calibration;
              return to_array(synthesize_absorption(model, to_vector(freqs)).values);
          },
          py::arg("scheme"), py::arg("populations"), py::arg("frequencies"), py::arg("total_fwhm") = 150e6,
          py::arg("peak_calibration") = py::none(), "Absorption in dB/cm at detunings from the optical origin.");

    m.def("gamma_of_t", [](double t, double gamma_d, double gamma_r, double gamma_or, double f) {
              return gamma_of_T(RelaxationParams{gamma_d, gamma_r, gamma_or, f}, t);
          },
          py::arg("temperature"), py::arg("gamma_d") = 9e-4, py::arg("gamma_r") = 0.0,
          py::arg("gamma_or") = kDefaultOrbachCoefficient, py::arg("f") = 214e9 * 7.0);

    m.def("evolve_populations",
          [](const LevelScheme& s, const std::vector<double>& pops, double gamma, double temperature,
             const Array& times, double pump_rate, int pump_band) {
              std::optional<PumpConfig> pump;
              if (pump_rate > 0.0) pump = PumpConfig::defaults(s, pump_band, pump_rate);
              const Trajectory t = evolve_populations_at(state_from(pops), gamma, s, temperature, pump, to_vector(times));
              py::array_t<double> out({static_cast<py::ssize_t>(t.states.size()), static_cast<py::ssize_t>(kHyperfineStates)});
              auto o = out.mutable_unchecked<2>();
              for (std::size_t k = 0; k < t.states.size(); ++k)
                  for (int j = 0; j < kHyperfineStates; ++j) o(k, j) = t.states[k].p[j];
              return out;
          },
          py::arg("scheme"), py::arg("populations"), py::arg("gamma"), py::arg("temperature"), py::arg("times"),
          py::arg("pump_rate") = 0.0, py::arg("pump_band") = 1, "Rows are populations at each requested time.");

    m.def("simulate_spin_pumping", [](const LevelScheme& s, double rate, double gamma, double duration, double temperature) {
              return state_list(simulate_spin_pumping(s, PumpConfig::defaults(s, 1, rate), gamma, duration, temperature));
          },
          py::arg("scheme"), py::arg("rate"), py::arg("gamma"), py::arg("duration"), py::arg("temperature") = 1.4);

    m.def("predict_holes_antiholes", [](const LevelScheme& s, double burn_frequency) {
              const auto table = transition_table(s);
              const HolePattern p = predict_holes_antiholes(s, table, burn_frequency, Branching::from_strengths(s.strengths()));
              py::list out;
              for (const auto& f : p.features) {
                  out.append(py::make_tuple(f.frequency, feature_sign_name(f.sign), f.amplitude, m_label(f.ground)));
              }
              return out;
          },
          py::arg("scheme"), py::arg("burn_frequency"), "(frequency, sign, amplitude, ground label) tuples");

    m.def("hole_lifetime_vs_field", [](const Array& fields, double temperature) {
              PhononModel model;
              model.temperature = temperature;
              return to_array(hole_lifetime_vs_field(model, RelaxationParams{}, to_vector(fields)));
          },
          py::arg("fields"), py::arg("temperature") = 1.4);

    m.def("echo_amplitude", [](double tau, double t2, double x) { return echo_amplitude(tau, {t2, x}); },
          py::arg("tau"), py::arg("t2"), py::arg("mims_x"));
    m.def("envelope_from_linewidth", [](double fwhm, const std::string& convention) {
              return envelope_from_linewidth(fwhm, parse_envelope_convention(convention));
          },
          py::arg("fwhm"), py::arg("convention") = "echo_field");
    m.def("linewidth_from_envelope", [](double fwhm, const std::string& convention) {
              return linewidth_from_envelope(fwhm, parse_envelope_convention(convention));
          },
          py::arg("fwhm"), py::arg("convention") = "echo_field");
    m.def("simulate_raman_echo", [](const LevelScheme& s, double fwhm, double separation, int packets) {
              EchoSequence seq;
              seq.pulse_separation = separation;
              const EchoEnvelope e = simulate_raman_echo(s, fwhm, seq, packets);
              return py::make_tuple(to_array(e.times), to_array(e.amplitude));
          },
          py::arg("scheme"), py::arg("inhomogeneous_fwhm"), py::arg("pulse_separation") = 30e-3,
          py::arg("packets") = 400);
    m.def("trace_fwhm", [](const Array& t, const Array& v) { return trace_fwhm(to_vector(t), to_vector(v)); });
    m.def("fit_echo_decay", [](const Array& tau, const Array& amp) {
              const EchoFit f = fit_echo_decay(to_vector(tau), to_vector(amp));
              py::dict d = fit_dict(f.result);
              d["t2"] = f.model.t2;
              d["mims_x"] = f.model.mims_x;
              return d;
          },
          py::arg("tau"), py::arg("amplitude"));
    m.def("fit_eq1", [](const Array& t, const Array& rates, double f, double max_temperature) {
              Eq1FitOptions opts;
              opts.max_temperature = max_temperature;
              return fit_dict(fit_eq1(to_vector(t), to_vector(rates), f, opts).result);
          },
          py::arg("temperatures"), py::arg("rates"), py::arg("f") = 214e9 * 7.0, py::arg("max_temperature") = 2.6);
}
