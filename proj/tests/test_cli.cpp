#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "run.hpp"
#include "spinhole/csv.hpp"
#include "spinhole/dynamics.hpp"

using namespace spinhole;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path dir;

    explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("spinhole_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    fs::path write(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file) << text;
        return dir / file;
    }
};

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run_cli(const fs::path& config, const fs::path& out_dir, std::optional<std::uint64_t> seed = {},
                std::optional<std::string> command = {}) {
    cli::RunRequest req;
    req.config_path = config;
    req.out_dir = out_dir;
    req.seed = seed;
    req.command = command;
    std::ostringstream out, err;
    const int code = cli::run(req, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const char* kSpectrum = R"(command: spectrum
populations: {kind: polarized, target: "+7/2", fraction: 0.95}
spectrum:
  grid: {start: -2.0e9, stop: 2.0e9, points: 801}
  dispersion: true
  modulation: {kind: am, carrier_detuning: -2.5e9, frequencies: {start: 1.0e8, stop: 4.0e9, points: 50}}
)";

const char* kPump = R"(command: pump
pump: {rate_multiple: 100, duration: 1000, samples: 11}
)";

const char* kRelax = R"(command: relax
relax: {temperatures: {start: 1.4, stop: 2.6, points: 13}}
)";

const char* kHoleburn = R"(command: holeburn
holeburn:
  transition: ["+7/2", "+7/2"]
  decay: {gamma: 1.0e-3, cross_relax: {1: 0.01}, times: {start: 0, stop: 100, points: 5}}
)";

const char* kLifetime = R"(command: lifetime
lifetime: {fields: {start: 0.0, stop: 7.0, points: 71}}
)";

const char* kEcho = R"(command: echo
echo:
  t2: 1.3
  mims_x: 1.8
  noise: 0.01
  taus: {start: 0.05, stop: 2.5, points: 50}
  envelope: {inhomogeneous_fwhm: 1.3e5, packets: 200, samples: 201}
)";

}  // namespace

TEST_CASE("missing or empty configuration") {
    Sandbox box("empty");
    const auto empty = run_cli(box.write("empty.yaml", ""), box.dir / "out");
    CHECK(empty.code == cli::exit_config);
    CHECK(empty.err.find("error[invalid-config]") != std::string::npos);
    CHECK(empty.err.find("usage:") != std::string::npos);

    const auto missing = run_cli(box.dir / "nope.yaml", box.dir / "out");
    CHECK(missing.code == cli::exit_io);
    CHECK(missing.err.rfind("error[io]", 0) == 0);

    const auto unknown = run_cli(box.write("u.yaml", "command: teleport\n"), box.dir / "out");
    CHECK(unknown.code == cli::exit_config);

    const auto broken = run_cli(box.write("b.yaml", "command: [unclosed\n"), box.dir / "out");
    CHECK(broken.code == cli::exit_config);

    const auto bad_value = run_cli(box.write("v.yaml", "command: spectrum\nscheme: {field: -1}\n"), box.dir / "out");
    CHECK(bad_value.code == cli::exit_config);
}

TEST_CASE("error categories map onto exit codes") {
    Sandbox box("codes");
    const auto domain = run_cli(box.write("d.yaml", "command: pump\npump: {temperature: -1}\n"), box.dir / "out");
    CHECK(domain.code == cli::exit_numerical);
    CHECK(domain.err.rfind("error[domain]", 0) == 0);

    const auto no_data = run_cli(box.write("f.yaml", "command: fit\nfit: {kind: echo, data: missing.csv}\n"), box.dir / "out");
    CHECK(no_data.code == cli::exit_io);
}

TEST_CASE("spectrum command reproduces the calibrated peak") {
    Sandbox box("spectrum");
    const auto r = run_cli(box.write("s.yaml", kSpectrum), box.dir / "out");
    REQUIRE(r.code == 0);
    for (const char* f : {"spectrum.csv", "spectrum.svg", "dispersion.csv", "modulation.csv", "modulation.svg"}) {
        CHECK(fs::exists(box.dir / "out" / f));
    }
    const CsvTable t = read_csv(box.dir / "out" / "spectrum.csv");
    double peak = 0.0;
    for (double v : t.numeric("value")) peak = std::max(peak, v);
    CHECK(peak == doctest::Approx(70.0).epsilon(4.0 / 70.0));
}

TEST_CASE("relax command evaluates the rate law") {
    Sandbox box("relax");
    REQUIRE(run_cli(box.write("r.yaml", kRelax), box.dir / "out").code == 0);
    const CsvTable t = read_csv(box.dir / "out" / "relax.csv");
    const auto temps = t.numeric("temperature_k");
    const auto rates = t.numeric("rate_per_s");
    REQUIRE(rates.size() == 13);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        CHECK(rates[i] == gamma_of_T(RelaxationParams{}, temps[i]));
        if (i) CHECK(rates[i] > rates[i - 1]);
    }
}

TEST_CASE("every command is bit-reproducible and its CSVs read back") {
    Sandbox box("repro");
    for (const char* text : {kSpectrum, kPump, kRelax, kHoleburn, kLifetime, kEcho}) {
        const fs::path cfg = box.write("c.yaml", text);
        const auto a = run_cli(cfg, box.dir / "a", 5);
        const auto b = run_cli(cfg, box.dir / "b", 5);
        REQUIRE(a.code == 0);
        REQUIRE(b.code == 0);
        int csvs = 0;
        for (const auto& entry : fs::directory_iterator(box.dir / "a")) {
            const fs::path other = box.dir / "b" / entry.path().filename();
            CHECK(slurp(entry.path()) == slurp(other));
            if (entry.path().extension() == ".csv") {
                ++csvs;
                const CsvTable t = read_csv(entry.path());
                CHECK(parse_csv(to_csv(t)).rows == t.rows);
            }
        }
        CHECK(csvs > 0);
        fs::remove_all(box.dir / "a");
        fs::remove_all(box.dir / "b");
    }
}

TEST_CASE("seed controls the synthetic noise") {
    Sandbox box("seed");
    const fs::path cfg = box.write("e.yaml", kEcho);
    REQUIRE(run_cli(cfg, box.dir / "one", 1).code == 0);
    REQUIRE(run_cli(cfg, box.dir / "two", 2).code == 0);
    CHECK(slurp(box.dir / "one" / "decay.csv") != slurp(box.dir / "two" / "decay.csv"));
    CHECK(fs::exists(box.dir / "one" / "echo_fit.txt"));
    CHECK(fs::exists(box.dir / "one" / "echo_trace.csv"));
}

TEST_CASE("fit command consumes emitted data") {
    Sandbox box("fit");
    REQUIRE(run_cli(box.write("e.yaml", kEcho), box.dir / "gen", 3).code == 0);
    fs::copy_file(box.dir / "gen" / "decay.csv", box.dir / "decay.csv");
    const auto r = run_cli(box.write("f.yaml", "command: fit\nfit: {kind: echo, data: decay.csv}\n"), box.dir / "out");
    REQUIRE(r.code == 0);
    const CsvTable t = read_csv(box.dir / "out" / "fit.csv");
    const auto names = t.text("parameter");
    const auto values = t.numeric("value");
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "t2") CHECK(values[i] == doctest::Approx(1.3).epsilon(0.05));
    }
    CHECK(fs::exists(box.dir / "out" / "fit_report.txt"));
}

TEST_CASE("output directory resolution") {
    Sandbox box("outdir");
    const fs::path cfg = box.write("r.yaml", std::string(kRelax) + "output_dir: from_config\n");
    cli::RunRequest req;
    req.config_path = cfg;
    std::ostringstream out, err;
    REQUIRE(cli::run(req, out, err) == 0);
    CHECK(fs::exists(box.dir / "from_config" / "relax.csv"));

    req.out_dir = box.dir / "from_flag";
    REQUIRE(cli::run(req, out, err) == 0);
    CHECK(fs::exists(box.dir / "from_flag" / "relax.csv"));

    const fs::path bare = box.write("bare.yaml", kRelax);
    req.config_path = bare;
    req.out_dir.reset();
    ::setenv("SPINHOLE_OUT_DIR", (box.dir / "from_env").c_str(), 1);
    REQUIRE(cli::run(req, out, err) == 0);
    ::unsetenv("SPINHOLE_OUT_DIR");
    CHECK(fs::exists(box.dir / "from_env" / "relax.csv"));
}
