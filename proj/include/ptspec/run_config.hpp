#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptspec/bath.hpp"
#include "ptspec/system_model.hpp"

namespace ptspec {

/// k_B / hbar in ps^-1 per kelvin (CODATA 2018 exact constants).
inline constexpr double kKelvinToInversePs = 1.380649e-23 / 1.054571817e-34 * 1e-12;

enum class Task { Linear, Spectrum2D, Correlation, PeakScan };

std::string_view to_string(Task t);

struct RunConfig {
    struct System {
        double epsilon = 5.0;
        double omega_el = 2.0;
        bool operator==(const System&) const = default;
    };
    struct Bath {
        double alpha = 0.0;
        double omega_c = 3.04;
        double temperature = 13.09;  // ps^-1, converted when given in kelvin
        std::optional<double> temperature_kelvin;
        /// peak-scan only, ps^-1
        std::vector<double> temperatures;
        std::vector<double> temperatures_kelvin;
        bool operator==(const Bath&) const = default;
    };
    struct Numerics {
        double dt = 0.1;
        std::size_t n_steps = 100;
        std::size_t dkmax = 40;
        double eps_rel = 1e-6;
        bool operator==(const Numerics&) const = default;
    };
    struct Spectrum {
        std::size_t n_t1 = 50;
        std::size_t n_t3 = 50;
        Transition transition = Transition::V2;
        bool half_cosine = true;
        std::size_t pad_factor = 4;
        bool negative_frequencies = false;
        double prominence = 0.05;
        bool operator==(const Spectrum&) const = default;
    };
    struct Correlation {
        int pathway = 4;
        std::size_t t1_step = 0;
        /// extra thresholds compared against the tightest one; empty means numerics.eps_rel only
        std::vector<double> eps_rel;
        bool operator==(const Correlation&) const = default;
    };
    struct Output {
        std::string directory = "out";
        std::vector<std::string> formats{"csv"};
        bool operator==(const Output&) const = default;
    };

    System system;
    Bath bath;
    Numerics numerics;
    Task task = Task::Linear;
    std::vector<std::string> engines{"pt"};
    Spectrum spectrum;
    Correlation correlation;
    Output output;

    bool operator==(const RunConfig&) const = default;

    BathSpec bath_spec() const { return {bath.alpha, bath.omega_c, bath.temperature}; }
    bool wants_format(std::string_view f) const;
};

/// Strict parse: unknown keys, wrong types and non-physical values raise ConfigError.
RunConfig parse_run_config(std::string_view json_text);
/// Throws IoError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON text; parse_run_config(to_json_text(c)) == c.
std::string to_json_text(const RunConfig& c, int indent = 2);

/// Re-checks every invariant of a configuration built in code.
void validate(const RunConfig& c);

}  // namespace ptspec
