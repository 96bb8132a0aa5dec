#pragma once

// Config-driven command runner behind the spinhole executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spinhole::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_io = 4 };

struct RunRequest {
    std::optional<std::string> command;  // overrides `command:` in the config
    std::filesystem::path config_path;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

const std::vector<std::string_view>& command_names();
std::string usage_text();

/// Runs one command. Errors are reported on `err` as
/// "error[<category>]: <message>" and mapped to an exit code.
int run(const RunRequest& request, std::ostream& out, std::ostream& err);

}  // namespace spinhole::cli
