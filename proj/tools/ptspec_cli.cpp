#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptspec/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Process-tensor simulator of multi-time correlations and optical spectra"};
    app.require_subcommand(1);

    ptspec::RunOptions options;
    std::string config_path;
    std::string pt_cache;
    std::string output;

    CLI::App* run = app.add_subcommand("run", "Execute a JSON run configuration");
    run->add_option("config", config_path, "Run configuration (JSON)")->required();
    run->add_option("--pt-cache", pt_cache, "Directory holding cached process tensors");
    run->add_option("--engine", options.engines, "Engine to run: pt, wcme or pme (repeatable)")
        ->check(CLI::IsMember({"pt", "wcme", "pme"}))
        ->take_all()
        ->allow_extra_args(false);
    run->add_option("--output", output, "Output directory (overrides the configuration)");
    run->add_flag("--force-rebuild-pt", options.force_rebuild_pt, "Ignore and overwrite cached process tensors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ptspec::kExitConfig;
    }
    if (!pt_cache.empty()) options.pt_cache = pt_cache;
    if (!output.empty()) options.output = output;
    return ptspec::run_main(config_path, options, std::cout, std::cerr);
}
