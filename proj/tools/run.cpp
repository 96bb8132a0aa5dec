#include "run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <yaml-cpp/yaml.h>

#include "spinhole/csv.hpp"
#include "spinhole/dynamics.hpp"
#include "spinhole/echo.hpp"
#include "spinhole/error.hpp"
#include "spinhole/fit_drivers.hpp"
#include "spinhole/holeburn.hpp"
#include "spinhole/plot.hpp"
#include "spinhole/spectrum.hpp"

namespace spinhole::cli {

namespace fs = std::filesystem;

const std::vector<std::string_view>& command_names() {
    static const std::vector<std::string_view> names{"spectrum", "pump", "relax", "holeburn", "lifetime", "echo", "fit"};
    return names;
}

std::string usage_text() {
    return "usage: spinhole [command] --config <file.yaml> [--out <dir>] [--seed <n>] [--verbose]\n"
           "\n"
           "commands:\n"
           "  spectrum   absorption spectrum (and optional AM/PM beat response)\n"
           "  pump       population trajectory under optical pumping\n"
           "  relax      spin-lattice rate versus temperature\n"
           "  holeburn   hole/anti-hole pattern and its decay\n"
           "  lifetime   hole lifetime versus magnetic field\n"
           "  echo       echo decay versus total delay tau, echo envelope, optional fit\n"
           "  fit        fit a model to a CSV data file\n"
           "\n"
           "The command may also be given as `command:` in the config.\n"
           "Output directory: --out, then `output_dir:` in the config, then $SPINHOLE_OUT_DIR, then ./spinhole-out.\n"
           "Exit status: 0 success, 2 config error, 3 numerical or fit failure, 4 I/O failure.\n";
}

namespace {

// ---------------------------------------------------------------- config access

[[noreturn]] void config_error(const YAML::Node& node, const std::string& what) {
    if (node.Mark().is_null()) fail(ErrorCategory::invalid_config, what);
    fail(ErrorCategory::invalid_config, fmt::format("line {}: {}", node.Mark().line + 1, what));
}

YAML::Node section(const YAML::Node& root, const char* key) {
    const YAML::Node n = root[key];
    if (n && !n.IsMap()) config_error(n, fmt::format("'{}' must be a mapping", key));
    return n ? n : YAML::Node(YAML::NodeType::Map);
}

template <class T>
T get(const YAML::Node& node, const char* key, T fallback) {
    const YAML::Node v = node[key];
    if (!v || v.IsNull()) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        config_error(v, fmt::format("'{}' has the wrong type", key));
    }
}

template <class T>
std::vector<T> get_list(const YAML::Node& node, const char* key, std::vector<T> fallback) {
    const YAML::Node v = node[key];
    if (!v || v.IsNull()) return fallback;
    if (!v.IsSequence()) config_error(v, fmt::format("'{}' must be a list", key));
    try {
        return v.as<std::vector<T>>();
    } catch (const YAML::Exception&) {
        config_error(v, fmt::format("'{}' has the wrong element type", key));
    }
}

/// A grid given as {start, stop, points} or as an explicit list.
std::vector<double> get_grid(const YAML::Node& node, const char* key, double start, double stop, int points) {
    const YAML::Node v = node[key];
    if (v && v.IsSequence()) return get_list<double>(node, key, {});
    const YAML::Node g = v ? v : YAML::Node(YAML::NodeType::Map);
    if (!g.IsMap()) config_error(g, fmt::format("'{}' must be a list or {{start, stop, points}}", key));
    const int n = get<int>(g, "points", points);
    if (n < 2) config_error(g, fmt::format("'{}' needs at least 2 points", key));
    return linear_grid(get<double>(g, "start", start), get<double>(g, "stop", stop), static_cast<std::size_t>(n));
}

std::vector<double> ladder_spacings(const YAML::Node& node, const char* key, const std::vector<double>& fallback) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    if (v.IsScalar()) return std::vector<double>(kHyperfineStates - 1, get<double>(node, key, 0.0));
    return get_list<double>(node, key, fallback);
}

StrengthLaw strength_law(const YAML::Node& node, const char* key, StrengthLaw fallback) {
    const auto v = get_list<double>(node, key, {fallback.at_low, fallback.at_high});
    if (v.size() != 2) config_error(node[key], fmt::format("'{}' must be [at_low, at_high]", key));
    return {v[0], v[1]};
}

struct Context {
    YAML::Node root;
    fs::path config_dir;
    fs::path out_dir;
    std::uint64_t seed = 1;
    bool verbose = false;
    std::ostream* out = nullptr;
    std::vector<fs::path> written;

    void log(const std::string& line) const {
        if (verbose) *out << line << '\n';
    }
    fs::path input(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : config_dir / path;
    }
    void emit(const std::string& name, const CsvTable& table) {
        write_csv(out_dir / name, table);
        written.push_back(out_dir / name);
    }
    void emit_text(const std::string& name, const std::string& text) {
        write_file_atomic(out_dir / name, text);
        written.push_back(out_dir / name);
    }
};

LevelScheme scheme_from(const YAML::Node& root) {
    const YAML::Node s = section(root, "scheme");
    LevelConfig c;
    c.field = get<double>(s, "field", c.field);
    c.zeeman_slope = get<double>(s, "zeeman_slope", c.zeeman_slope);
    c.optical_origin = get<double>(s, "optical_origin", c.optical_origin);
    c.ground_spacings = ladder_spacings(s, "ground_spacing", c.ground_spacings);
    c.excited_spacings = ladder_spacings(s, "excited_spacing", c.excited_spacings);
    const YAML::Node st = section(s, "strengths");
    c.strengths.minus_one = strength_law(st, "minus_one", c.strengths.minus_one);
    c.strengths.plus_one = strength_law(st, "plus_one", c.strengths.plus_one);
    return build_level_scheme(c);
}

int state_index(const YAML::Node& node, const char* key, int fallback) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    const std::string text = v.as<std::string>();
    if (!text.empty() && (text[0] == '+' || text[0] == '-')) return m_index_from_label(text);
    return get<int>(node, key, fallback);
}

PopulationState populations_from(const YAML::Node& root, const LevelScheme& scheme) {
    const YAML::Node p = section(root, "populations");
    const std::string kind = get<std::string>(p, "kind", "polarized");
    if (kind == "polarized") return PopulationState::polarized(state_index(p, "target", 7), get<double>(p, "fraction", 0.95));
    if (kind == "uniform") return PopulationState::uniform();
    if (kind == "thermal") return thermal_equilibrium(scheme, get<double>(p, "temperature", 1.4));
    if (kind == "empty") return PopulationState{};
    if (kind == "explicit") {
        const auto v = get_list<double>(p, "values", {});
        if (v.size() != kHyperfineStates) config_error(p["values"], "populations.values needs 8 entries");
        PopulationState s;
        std::copy(v.begin(), v.end(), s.p.begin());
        return s;
    }
    config_error(p["kind"], fmt::format("unknown population kind '{}'", kind));
}

Lineshape lineshape_from(const YAML::Node& root) {
    const YAML::Node l = section(root, "lineshape");
    if (l["gaussian_fwhm"] || l["lorentzian_fwhm"]) {
        return Lineshape{get<double>(l, "gaussian_fwhm", 0.0), get<double>(l, "lorentzian_fwhm", 0.0)};
    }
    return Lineshape::equal_components(get<double>(l, "total_fwhm", 150e6));
}

AbsorptionModel model_from(const YAML::Node& root, const LevelScheme& scheme, const PopulationState& pops) {
    AbsorptionModel m = default_absorption_model(scheme, pops);
    const YAML::Node a = section(root, "absorption");
    m.lineshape = lineshape_from(root);
    m.peak_calibration = get<double>(a, "peak_calibration", m.peak_calibration);
    m.path_length = get<double>(a, "path_length", m.path_length);
    m.isotopes.target_fraction = get<double>(a, "target_fraction", m.isotopes.target_fraction);
    m.isotopes.impurity_offset = get<double>(a, "impurity_offset", m.isotopes.impurity_offset);
    m.isotopes.impurity_strength = get<double>(a, "impurity_strength", m.isotopes.impurity_strength);
    m.table = transition_table(scheme, get<bool>(a, "include_branching", false));
    m.validate();
    return m;
}

RelaxationParams relaxation_from(const YAML::Node& root, const LevelScheme& scheme) {
    const YAML::Node r = section(root, "relaxation");
    RelaxationParams p;
    p.gamma_d = get<double>(r, "gamma_d", p.gamma_d);
    p.gamma_r = get<double>(r, "gamma_r", p.gamma_r);
    p.gamma_or = get<double>(r, "gamma_or", p.gamma_or);
    p.f = get<double>(r, "f", scheme.electronic_splitting());
    p.validate();
    return p;
}

Branching branching_from(const YAML::Node& node, const LevelScheme& scheme, int band) {
    const YAML::Node b = node["branching"];
    if (!b) return Branching::from_strengths(scheme.strengths(), band);
    if (b.IsScalar()) {
        const std::string kind = b.as<std::string>();
        if (kind == "diagonal") return Branching::diagonal();
        if (kind == "default") return Branching::from_strengths(scheme.strengths(), band);
        config_error(b, fmt::format("unknown branching '{}'", kind));
    }
    if (!b.IsMap()) config_error(b, "branching must be 'default', 'diagonal' or a map of decay shift -> weight");
    Branching out;
    double total = 0.0;
    for (const auto& kv : b) {
        const int dm = kv.first.as<int>();
        const double w = kv.second.as<double>();
        out.probabilities[dm] = w;
        total += w;
    }
    if (!(total > 0.0)) config_error(b, "branching weights must have a positive sum");
    for (auto& [dm, w] : out.probabilities) w /= total;
    out.validate();
    return out;
}

CsvTable spectrum_table(const SpectrumGrid& s) {
    CsvTable t{{"frequency_hz", "value"}, {}};
    for (std::size_t i = 0; i < s.size(); ++i) t.add_row({format_number(s.frequencies[i]), format_number(s.values[i])});
    return t;
}

PlotSeries series(std::string label, std::vector<double> x, std::vector<double> y, double x_scale = 1.0) {
    for (double& v : x) v *= x_scale;
    return PlotSeries{std::move(label), std::move(x), std::move(y)};
}

// ---------------------------------------------------------------- commands

void run_spectrum(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const AbsorptionModel model = model_from(ctx.root, scheme, populations_from(ctx.root, scheme));
    const YAML::Node sp = section(ctx.root, "spectrum");
    const std::vector<double> grid = get_grid(sp, "grid", -2e9, 2e9, 2001);
    const ComplexSpectrum c = synthesize_susceptibility(model, grid);
    const SpectrumGrid alpha = c.absorption();
    ctx.emit("spectrum.csv", spectrum_table(alpha));
    std::vector<PlotSeries> plotted{series("absorption", alpha.frequencies, alpha.values, 1e-9)};
    if (get<bool>(sp, "dispersion", false)) {
        const SpectrumGrid d = c.dispersion();
        ctx.emit("dispersion.csv", spectrum_table(d));
        plotted.push_back(series("dispersion", d.frequencies, d.values, 1e-9));
    }
    ctx.log(fmt::format("peak absorption {:.6g} dB/cm", alpha.max_value()));
    ctx.emit_text("spectrum.svg", render_svg({"Absorption", "detuning (GHz)", "absorption (dB/cm)", plotted}));

    const YAML::Node mod = section(sp, "modulation");
    if (mod.size() > 0) {
        const double carrier = get<double>(mod, "carrier_detuning", 0.0);
        const std::vector<double> freqs = get_grid(mod, "frequencies", 10e6, 2e9, 400);
        const std::string kind = get<std::string>(mod, "kind", "am");
        ModulationOptions opts;
        opts.sideband_amplitude = get<double>(mod, "sideband_amplitude", opts.sideband_amplitude);
        opts.carrier_amplitude = get<double>(mod, "carrier_amplitude", opts.carrier_amplitude);
        ModulationResponse r;
        if (kind == "am") r = am_response(model, carrier, freqs, opts);
        else if (kind == "pm") r = pm_response(model, carrier, freqs, opts);
        else config_error(mod["kind"], fmt::format("modulation kind must be am or pm, got '{}'", kind));
        if (r.carrier_in_band) *ctx.out << "warning: carrier lies inside the absorption band\n";
        ctx.emit("modulation.csv", spectrum_table(r.response));
        ctx.emit_text("modulation.svg",
                      render_svg({fmt::format("{} beat response", kind), "modulation frequency (GHz)", "beat amplitude",
                                  {series(kind, r.response.frequencies, r.response.values, 1e-9)}}));
    }
}

void run_pump(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const RelaxationParams rp = relaxation_from(ctx.root, scheme);
    const YAML::Node p = section(ctx.root, "pump");
    const double temperature = get<double>(p, "temperature", 1.4);
    const double gamma = p["gamma"] ? get<double>(p, "gamma", 0.0) : gamma_of_T(rp, temperature);
    PumpConfig pump;
    pump.band = get<int>(p, "band", 1);
    pump.rate = p["rate"] ? get<double>(p, "rate", 0.0) : get<double>(p, "rate_multiple", 100.0) * gamma;
    pump.branching = branching_from(p, scheme, pump.band);
    EvolveOptions opts;
    opts.samples = get<int>(p, "samples", 201);
    const double duration = get<double>(p, "duration", 3600.0);
    const std::string start = get<std::string>(p, "initial", "thermal");
    PopulationState init = start == "thermal" ? thermal_equilibrium(scheme, temperature) : populations_from(ctx.root, scheme);
    const Trajectory traj = evolve_populations(init, gamma, scheme, temperature, pump, duration, opts);

    CsvTable t{{"time_s", "p0", "p1", "p2", "p3", "p4", "p5", "p6", "p7"}, {}};
    std::vector<PlotSeries> plotted(kHyperfineStates);
    for (int m = 0; m < kHyperfineStates; ++m) plotted[m].label = m_label(m);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::vector<std::string> row{format_number(traj.times[k])};
        for (int m = 0; m < kHyperfineStates; ++m) {
            row.push_back(format_number(traj.states[k].p[m]));
            plotted[m].x.push_back(traj.times[k]);
            plotted[m].y.push_back(traj.states[k].p[m]);
        }
        t.add_row(std::move(row));
    }
    ctx.log(fmt::format("gamma {:.6g} 1/s, pump rate {:.6g} 1/s, final p(+7/2) = {:.6f}, integration error <= {:.3g}",
                        gamma, pump.rate, traj.final_state().p[7], traj.error_estimate));
    ctx.emit("trajectory.csv", t);
    ctx.emit_text("trajectory.svg", render_svg({"Optical pumping", "time (s)", "population", plotted}));
}

void run_relax(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const RelaxationParams rp = relaxation_from(ctx.root, scheme);
    const YAML::Node r = section(ctx.root, "relax");
    const std::vector<double> temps = get_grid(r, "temperatures", 1.4, 2.6, 25);
    CsvTable t{{"temperature_k", "rate_per_s"}, {}};
    std::vector<double> rates;
    for (double T : temps) {
        rates.push_back(gamma_of_T(rp, T));
        t.add_row({format_number(T), format_number(rates.back())});
    }
    ctx.emit("relax.csv", t);
    PlotSpec plot{"Spin-lattice rate", "temperature (K)", "rate (1/s)", {series("gamma(T)", temps, rates)}};
    plot.log_y = true;
    ctx.emit_text("relax.svg", render_svg(plot));
}

void run_holeburn(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const TransitionTable table = transition_table(scheme);
    const YAML::Node h = section(ctx.root, "holeburn");
    double burn;
    if (h["frequency"]) {
        burn = get<double>(h, "frequency", 0.0);
    } else {
        const auto labels = get_list<std::string>(h, "transition", {"+7/2", "+7/2"});
        if (labels.size() != 2) config_error(h["transition"], "transition must be [ground, excited] labels");
        burn = scheme.transition_detuning(m_index_from_label(labels[0]), m_index_from_label(labels[1]));
    }
    BurnOptions opts;
    opts.resonance_window = get<double>(h, "resonance_window", opts.resonance_window);
    opts.depth = get<double>(h, "depth", opts.depth);
    opts.trench_width = get<double>(h, "trench_width", opts.trench_width);
    opts.trench_samples = get<int>(h, "trench_samples", opts.trench_samples);
    const HolePattern pattern = predict_holes_antiholes(scheme, table, burn, branching_from(h, scheme, 1), opts);
    for (const auto& w : pattern.warnings) *ctx.out << "warning: " << w << '\n';

    auto pattern_table = [](const HolePattern& p) {
        CsvTable t{{"frequency_hz", "sign", "amplitude", "ground_m"}, {}};
        for (const auto& f : p.features) {
            t.add_row({format_number(f.frequency), feature_sign_name(f.sign), format_number(f.amplitude), m_label(f.ground)});
        }
        return t;
    };
    ctx.emit("pattern.csv", pattern_table(pattern));
    PlotSeries holes{"holes", {}, {}, true}, anti{"anti-holes", {}, {}, true};
    for (const auto& f : pattern.features) {
        auto& s = f.sign == FeatureSign::hole ? holes : anti;
        s.x.push_back(f.frequency * 1e-9);
        s.y.push_back(f.sign == FeatureSign::hole ? -f.amplitude : f.amplitude);
    }
    ctx.emit_text("pattern.svg", render_svg({"Hole pattern", "detuning (GHz)", "signed amplitude", {holes, anti}}));

    const YAML::Node d = section(h, "decay");
    if (d.size() > 0) {
        std::map<int, double> cross;
        const YAML::Node cr = d["cross_relax"];
        if (cr) {
            if (!cr.IsMap()) config_error(cr, "cross_relax must map |delta m| to a rate");
            for (const auto& kv : cr) cross[kv.first.as<int>()] = kv.second.as<double>();
        }
        const std::vector<double> times = get_grid(d, "times", 0.0, 300.0, 61);
        const auto traj = simulate_hole_decay(pattern, table, get<double>(d, "gamma", 0.0), cross, times);
        CsvTable t{{"time_s", "hole_area", "anti_hole_area"}, {}};
        std::vector<double> area;
        for (const auto& s : traj) {
            t.add_row({format_number(s.time), format_number(s.pattern.hole_area()), format_number(s.pattern.anti_hole_area())});
            area.push_back(s.pattern.hole_area());
        }
        ctx.emit("decay.csv", t);
        ctx.emit_text("decay.svg", render_svg({"Hole decay", "time (s)", "hole area", {series("hole", times, area)}}));
    }
}

void run_lifetime(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const RelaxationParams rp = relaxation_from(ctx.root, scheme);
    const YAML::Node l = section(ctx.root, "lifetime");
    PhononModel m;
    m.zeeman_slope = get<double>(l, "zeeman_slope", scheme.zeeman_slope());
    m.temperature = get<double>(l, "temperature", m.temperature);
    m.cross_relax_plateau = get<double>(l, "plateau", m.cross_relax_plateau);
    m.low_field_peak_field = get<double>(l, "peak_field", m.low_field_peak_field);
    m.electron_cross_relax_rate = get<double>(l, "electron_cross_relax_rate", m.electron_cross_relax_rate);
    m.cross_relax_field = get<double>(l, "cross_relax_field", m.cross_relax_field);
    m.phonon_coupling = get<double>(l, "phonon_coupling", m.phonon_coupling);
    m.phonon_density_exponent = get<double>(l, "phonon_density_exponent", m.phonon_density_exponent);
    m.floor_enabled = get<bool>(l, "floor", m.floor_enabled);
    const std::vector<double> fields = get_grid(l, "fields", 0.0, 7.0, 701);
    const std::vector<double> life = hole_lifetime_vs_field(m, rp, fields);
    CsvTable t{{"field_T", "lifetime_s"}, {}};
    for (std::size_t i = 0; i < fields.size(); ++i) t.add_row({format_number(fields[i]), format_number(life[i])});
    ctx.emit("lifetime.csv", t);
    PlotSpec plot{"Hole lifetime", "field (T)", "lifetime (s)", {series("lifetime", fields, life)}};
    plot.log_y = true;
    ctx.emit_text("lifetime.svg", render_svg(plot));
}

void run_echo(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const YAML::Node e = section(ctx.root, "echo");
    const EchoDecayModel model{get<double>(e, "t2", 1.3), get<double>(e, "mims_x", 1.0)};
    model.validate();
    const std::vector<double> taus = get_grid(e, "taus", 0.02, 4.0, 50);
    const double noise = get<double>(e, "noise", 0.0);
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    CsvTable decay{{"tau_s", "amplitude"}, {}};
    std::vector<double> amps;
    for (double tau : taus) {
        double a = echo_amplitude(tau, model);
        if (noise > 0.0) a *= 1.0 + noise * normal(rng);
        amps.push_back(a);
        decay.add_row({format_number(tau), format_number(a)});
    }
    ctx.emit("decay.csv", decay);
    std::vector<PlotSeries> plotted{series("data", taus, amps)};
    plotted.front().markers = noise > 0.0;

    if (get<bool>(e, "fit", noise > 0.0)) {
        const EchoFit fit = fit_echo_decay(taus, amps);
        ctx.emit_text("echo_fit.txt", format_report(fit.result));
        std::vector<double> curve;
        for (double tau : taus) curve.push_back(fit.amplitude * echo_amplitude(tau, fit.model));
        plotted.push_back(series("fit", taus, curve));
        ctx.log(fmt::format("fitted t2 = {:.6g} s, x = {:.4g}", fit.model.t2, fit.model.mims_x));
    }
    PlotSpec plot{"Echo decay", "total delay tau (s)", "echo amplitude", plotted};
    ctx.emit_text("decay.svg", render_svg(plot));

    const YAML::Node env = section(e, "envelope");
    if (env.size() > 0) {
        EchoSequence seq;
        seq.pulse_separation = get<double>(env, "pulse_separation", seq.pulse_separation);
        seq.window = get<double>(env, "window", seq.window);
        seq.samples = get<int>(env, "samples", seq.samples);
        seq.readout_on = get<bool>(env, "readout_on", seq.readout_on);
        EchoSimulationOptions opts;
        opts.monte_carlo = get<bool>(env, "monte_carlo", false);
        opts.seed = ctx.seed;
        opts.intensity = get<bool>(env, "intensity", false);
        const double width = get<double>(env, "inhomogeneous_fwhm", 130e3);
        const EchoEnvelope trace = simulate_raman_echo(scheme, width, seq, get<int>(env, "packets", 400), opts);
        for (const auto& w : trace.warnings) *ctx.out << "warning: " << w << '\n';
        CsvTable t{{"time_s", "amplitude"}, {}};
        for (std::size_t i = 0; i < trace.times.size(); ++i) {
            t.add_row({format_number(trace.times[i]), format_number(trace.amplitude[i])});
        }
        ctx.emit("echo_trace.csv", t);
        std::vector<double> rel;
        for (double x : trace.times) rel.push_back((x - trace.echo_time) * 1e6);
        ctx.emit_text("echo_trace.svg", render_svg({"Echo envelope", "time from echo (us)", "amplitude",
                                                    {series("envelope", rel, trace.amplitude)}}));
        if (width > 0.0 && seq.readout_on) {
            const EnvelopeConvention conv = parse_envelope_convention(get<std::string>(env, "convention", "echo_field"));
            ctx.log(fmt::format("envelope FWHM {:.6g} s; {} convention predicts {:.6g} s", trace_fwhm(trace.times, trace.amplitude),
                                envelope_convention_name(conv), envelope_from_linewidth(width, conv)));
        }
    }
}

CsvTable fit_table(const FitResult& r) {
    CsvTable t{{"parameter", "value", "low", "high", "low_open", "high_open"}, {}};
    for (std::size_t i = 0; i < r.params.size(); ++i) {
        const Interval iv = i < r.intervals.size() ? r.intervals[i] : Interval{r.params[i].value, r.params[i].value};
        t.add_row({r.params[i].name, format_number(r.params[i].value), format_number(iv.low), format_number(iv.high),
                   iv.low_open ? "1" : "0", iv.high_open ? "1" : "0"});
    }
    return t;
}

void run_fit(Context& ctx) {
    const LevelScheme scheme = scheme_from(ctx.root);
    const YAML::Node f = section(ctx.root, "fit");
    const std::string kind = get<std::string>(f, "kind", "");
    const std::string data_path = get<std::string>(f, "data", "");
    if (data_path.empty()) config_error(f, "fit.data must name a CSV file");
    const CsvTable data = read_csv(ctx.input(data_path));
    FitResult result;
    std::vector<PlotSeries> plotted;
    PlotSpec plot;
    if (kind == "eq1") {
        const RelaxationParams rp = relaxation_from(ctx.root, scheme);
        Eq1FitOptions opts;
        opts.max_temperature = get<double>(f, "max_temperature", opts.max_temperature);
        opts.gamma_r = rp.gamma_r;
        opts.initial_gamma_d = get<double>(f, "initial_gamma_d", opts.initial_gamma_d);
        opts.initial_gamma_or = get<double>(f, "initial_gamma_or", opts.initial_gamma_or);
        const auto t = data.numeric("temperature_k");
        const auto g = data.numeric("rate_per_s");
        const Eq1Fit fit = fit_eq1(t, g, rp.f, opts);
        std::vector<double> curve;
        for (double T : t) curve.push_back(gamma_of_T({fit.gamma_d, opts.gamma_r, fit.gamma_or, rp.f}, T));
        plot = {"Relaxation-law fit", "temperature (K)", "rate (1/s)", {series("data", t, g), series("fit", t, curve)}};
        plot.series[0].markers = true;
        plot.log_y = true;
        result = fit.result;
    } else if (kind == "echo") {
        const auto tau = data.numeric("tau_s");
        const auto a = data.numeric("amplitude");
        const EchoFit fit = fit_echo_decay(tau, a);
        std::vector<double> curve;
        for (double x : tau) curve.push_back(fit.amplitude * echo_amplitude(x, fit.model));
        plot = {"Echo decay fit", "total delay tau (s)", "echo amplitude", {series("data", tau, a), series("fit", tau, curve)}};
        plot.series[0].markers = true;
        result = fit.result;
    } else if (kind == "populations") {
        const AbsorptionModel model = model_from(ctx.root, scheme, PopulationState::uniform());
        const SpectrumGrid s{data.numeric("frequency_hz"), data.numeric("value")};
        PopulationFitOptions opts;
        if (f["free_states"]) {
            opts.free_states.clear();
            for (const auto& n : f["free_states"]) {
                const std::string label = n.as<std::string>();
                opts.free_states.push_back(label[0] == '+' || label[0] == '-' ? m_index_from_label(label) : n.as<int>());
            }
        }
        const PopulationFit fit = fit_population_fractions(s, scheme, model, opts);
        std::vector<double> idx, pop;
        for (int m = 0; m < kHyperfineStates; ++m) {
            idx.push_back(m_value(m));
            pop.push_back(fit.state.p[m]);
        }
        plot = {"Fitted populations", "m_I", "population", {series("fit", idx, pop)}};
        plot.series[0].markers = true;
        result = fit.result;
    } else if (kind == "relaxation") {
        const auto t = data.numeric("time_s");
        const auto fr = data.numeric("frequency_hz");
        const auto v = data.numeric("value");
        std::vector<double> times;
        std::vector<SpectrumGrid> spectra;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (times.empty() || t[i] != times.back()) {
                times.push_back(t[i]);
                spectra.emplace_back();
            }
            spectra.back().frequencies.push_back(fr[i]);
            spectra.back().values.push_back(v[i]);
        }
        const AbsorptionModel model = model_from(ctx.root, scheme, PopulationState::uniform());
        RelaxationSeriesOptions opts;
        opts.temperature = get<double>(f, "temperature", opts.temperature);
        opts.initial_gamma = get<double>(f, "initial_gamma", opts.initial_gamma);
        opts.initial_state = populations_from(ctx.root, scheme);
        const RelaxationFit fit = fit_relaxation_timeseries(times, spectra, scheme, model, opts);
        std::vector<double> peak;
        for (const auto& s : spectra) peak.push_back(s.max_value());
        plot = {"Relaxation series", "time (s)", "peak absorption (dB/cm)", {series("data", times, peak)}};
        plot.series[0].markers = true;
        result = fit.result;
    } else {
        config_error(f["kind"], fmt::format("fit.kind must be eq1, echo, populations or relaxation, got '{}'", kind));
    }
    ctx.emit_text("fit_report.txt", format_report(result));
    ctx.emit("fit.csv", fit_table(result));
    ctx.emit_text("fit.svg", render_svg(plot));
    ctx.log(format_report(result));
}

int exit_code_for(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::invalid_config:
        case ErrorCategory::unsupported: return exit_config;
        case ErrorCategory::io: return exit_io;
        default: return exit_numerical;
    }
}

}  // namespace

int run(const RunRequest& request, std::ostream& out, std::ostream& err) {
    try {
        if (request.config_path.empty()) {
            err << "error[invalid-config]: no config file given\n" << usage_text();
            return exit_config;
        }
        if (!fs::exists(request.config_path)) {
            err << fmt::format("error[io]: config file {} does not exist\n", request.config_path.string());
            return exit_io;
        }
        YAML::Node root;
        try {
            root = YAML::LoadFile(request.config_path.string());
        } catch (const YAML::Exception& e) {
            err << fmt::format("error[invalid-config]: {}\n", e.what());
            return exit_config;
        }
        if (root.IsNull() || (root.IsMap() && root.size() == 0)) {
            err << "error[invalid-config]: config is empty\n" << usage_text();
            return exit_config;
        }
        if (!root.IsMap()) {
            err << "error[invalid-config]: config must be a mapping\n" << usage_text();
            return exit_config;
        }

        Context ctx;
        ctx.root = root;
        ctx.config_dir = fs::absolute(request.config_path).parent_path();
        ctx.verbose = request.verbose;
        ctx.out = &out;
        ctx.seed = request.seed ? *request.seed : get<std::uint64_t>(root, "seed", 1);

        const std::string command = request.command ? *request.command : get<std::string>(root, "command", "");
        if (command.empty()) {
            err << "error[invalid-config]: no command given\n" << usage_text();
            return exit_config;
        }

        if (request.out_dir) {
            ctx.out_dir = *request.out_dir;
        } else if (root["output_dir"]) {
            ctx.out_dir = ctx.input(get<std::string>(root, "output_dir", ""));
        } else if (const char* env = std::getenv("SPINHOLE_OUT_DIR"); env && *env) {
            ctx.out_dir = env;
        } else {
            ctx.out_dir = "spinhole-out";
        }
        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec) fail(ErrorCategory::io, fmt::format("cannot create {}: {}", ctx.out_dir.string(), ec.message()));

        if (command == "spectrum") run_spectrum(ctx);
        else if (command == "pump") run_pump(ctx);
        else if (command == "relax") run_relax(ctx);
        else if (command == "holeburn") run_holeburn(ctx);
        else if (command == "lifetime") run_lifetime(ctx);
        else if (command == "echo") run_echo(ctx);
        else if (command == "fit") run_fit(ctx);
        else {
            err << fmt::format("error[invalid-config]: unknown command '{}'\n", command) << usage_text();
            return exit_config;
        }
        for (const auto& p : ctx.written) out << p.string() << '\n';
        return exit_ok;
    } catch (const Error& e) {
        err << fmt::format("error[{}]: {}\n", category_name(e.category()), e.what());
        return exit_code_for(e.category());
    } catch (const YAML::Exception& e) {
        err << fmt::format("error[invalid-config]: {}\n", e.what());
        return exit_config;
    } catch (const fs::filesystem_error& e) {
        err << fmt::format("error[io]: {}\n", e.what());
        return exit_io;
    } catch (const std::exception& e) {
        err << fmt::format("error[numerical]: {}\n", e.what());
        return exit_numerical;
    }
}

}  // namespace spinhole::cli
