#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptspec/run_config.hpp"

namespace ptspec {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNonConvergence = 3,
    kExitIo = 4,
};

struct RunOptions {
    std::optional<std::filesystem::path> pt_cache;
    /// replaces config.engines when non-empty
    std::vector<std::string> engines;
    std::optional<std::filesystem::path> output;
    bool force_rebuild_pt = false;
};

/// Executes a validated configuration. Errors propagate as exceptions; see run_main.
void execute(const RunConfig& config, const RunOptions& options, std::ostream& log);

/// Loads, executes and maps every failure to an exit code with a one-line JSON message on err.
int run_main(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& log,
             std::ostream& err);

/// Shortest round-trip decimal text of x.
std::string format_number(double x);

/// Lowercase hex SHA-256 of a byte string or a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Cache file name for a process tensor with the given parameters.
std::string pt_cache_name(const BathSpec& b, double dt, std::size_t n_steps, std::size_t dkmax,
                          double eps_rel);

}  // namespace ptspec
