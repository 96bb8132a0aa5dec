#include <iostream>

#include <CLI11.hpp>

#include "run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation and model fitting for high-field hyperfine hole-burning spectroscopy", "spinhole"};
    app.footer(spinhole::cli::usage_text());
    spinhole::cli::RunRequest request;
    std::string command, config, out_dir;
    std::uint64_t seed = 0;
    app.add_option("command", command, "spectrum | pump | relax | holeburn | lifetime | echo | fit");
    app.add_option("-c,--config", config, "YAML run configuration");
    auto* out_opt = app.add_option("-o,--out", out_dir, "Output directory");
    auto* seed_opt = app.add_option("-s,--seed", seed, "Seed for stochastic options");
    app.add_flag("-v,--verbose", request.verbose, "Print progress and results");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : spinhole::cli::exit_config;
    }
    if (!command.empty()) request.command = command;
    request.config_path = config;
    if (*out_opt) request.out_dir = out_dir;
    if (*seed_opt) request.seed = seed;
    return spinhole::cli::run(request, std::cout, std::cerr);
}
