#include "ptspec/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ptspec/errors.hpp"

namespace ptspec {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxPadFactor = 64;

std::string_view task_name(Task t) {
    switch (t) {
        case Task::Linear: return "linear";
        case Task::Spectrum2D: return "spectrum2d";
        case Task::Correlation: return "correlation";
        case Task::PeakScan: return "peak-scan";
    }
    return "linear";
}

Task task_from_string(const std::string& s) {
    for (Task t : {Task::Linear, Task::Spectrum2D, Task::Correlation, Task::PeakScan}) {
        if (task_name(t) == s) return t;
    }
    throw ConfigError("task: unknown task '" + s + "' (linear, spectrum2d, correlation, peak-scan)");
}

// Field access with a dotted path in every message.
class Object {
public:
    Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "must be an object");
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, v] : j_.items()) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                throw ConfigError(where() + "unknown key '" + k + "'");
            }
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    Object object(const std::string& key) const { return {at(key), child(key)}; }

    double number(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(child(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(child(key) + ": must be finite");
        return x;
    }

    double positive(const std::string& key) const {
        const double x = number(key);
        if (!(x > 0.0)) throw ConfigError(child(key) + ": must be > 0");
        return x;
    }

    double non_negative(const std::string& key) const {
        const double x = number(key);
        if (!(x >= 0.0)) throw ConfigError(child(key) + ": must be >= 0");
        return x;
    }

    std::size_t count(const std::string& key, std::size_t min_value) const {
        const json& v = at(key);
        if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
            throw ConfigError(child(key) + ": expected an integer >= " + std::to_string(min_value));
        }
        return v.get<std::size_t>();
    }

    bool boolean(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_boolean()) throw ConfigError(child(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(child(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<std::string> strings(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError(child(key) + ": expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(child(key) + ": expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::vector<double> positives(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError(child(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number() || !(e.get<double>() > 0.0) || !std::isfinite(e.get<double>())) {
                throw ConfigError(child(key) + ": entries must be finite numbers > 0");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

private:
    const json& at(const std::string& key) const {
        if (!j_.contains(key)) throw ConfigError(where() + "missing key '" + key + "'");
        return j_.at(key);
    }
    std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }
    std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

    const json& j_;
    std::string path_;
};

void parse_bath(const Object& o, RunConfig::Bath& b) {
    o.allow_only({"alpha", "omega_c", "temperature", "temperature_kelvin", "temperatures",
                  "temperatures_kelvin"});
    b.alpha = o.non_negative("alpha");
    if (o.has("omega_c")) b.omega_c = o.positive("omega_c");
    const bool ps = o.has("temperature");
    const bool kelvin = o.has("temperature_kelvin");
    if (ps && kelvin) throw ConfigError("bath: give temperature or temperature_kelvin, not both");
    if (ps) b.temperature = o.positive("temperature");
    if (kelvin) {
        b.temperature_kelvin = o.positive("temperature_kelvin");
        b.temperature = *b.temperature_kelvin * kKelvinToInversePs;
    }
    if (o.has("temperatures") && o.has("temperatures_kelvin")) {
        throw ConfigError("bath: give temperatures or temperatures_kelvin, not both");
    }
    if (o.has("temperatures")) b.temperatures = o.positives("temperatures");
    if (o.has("temperatures_kelvin")) {
        b.temperatures_kelvin = o.positives("temperatures_kelvin");
        for (double k : b.temperatures_kelvin) b.temperatures.push_back(k * kKelvinToInversePs);
    }
    if (!ps && !kelvin && b.temperatures.empty()) {
        throw ConfigError("bath: missing temperature (temperature, temperature_kelvin or a list)");
    }
}

}  // namespace

std::string_view to_string(Task t) { return task_name(t); }

bool RunConfig::wants_format(std::string_view f) const {
    return std::find(output.formats.begin(), output.formats.end(), f) != output.formats.end();
}

void validate(const RunConfig& c) {
    if (!(c.system.epsilon > 0.0) || !std::isfinite(c.system.epsilon)) {
        throw ConfigError("system.epsilon: must be > 0");
    }
    if (!(c.system.omega_el >= 0.0) || !std::isfinite(c.system.omega_el)) {
        throw ConfigError("system.omega_el: must be >= 0");
    }
    if (!(c.bath.alpha >= 0.0) || !(c.bath.omega_c > 0.0) || !(c.bath.temperature > 0.0)) {
        throw ConfigError("bath: alpha >= 0, omega_c > 0 and temperature > 0 are required");
    }
    if (!(c.numerics.dt > 0.0) || !(c.numerics.eps_rel > 0.0) || c.numerics.eps_rel >= 1.0) {
        throw ConfigError("numerics: dt > 0 and 0 < eps_rel < 1 are required");
    }
    if (c.numerics.n_steps == 0 || c.numerics.dkmax == 0) {
        throw ConfigError("numerics: n_steps and dkmax must be >= 1");
    }
    if (c.engines.empty()) throw ConfigError("engines: select at least one of pt, wcme, pme");
    std::set<std::string> seen;
    for (const auto& e : c.engines) {
        if (e != "pt" && e != "wcme" && e != "pme") {
            throw ConfigError("engines: unknown engine '" + e + "' (pt, wcme, pme)");
        }
        if (!seen.insert(e).second) throw ConfigError("engines: duplicate engine '" + e + "'");
    }
    for (const auto& f : c.output.formats) {
        if (f != "csv" && f != "plt") throw ConfigError("output.formats: unknown format '" + f + "'");
    }
    if (!c.wants_format("csv")) throw ConfigError("output.formats: csv is always written and must be listed");
    if (c.output.directory.empty()) throw ConfigError("output.directory: must not be empty");
    const auto& s = c.spectrum;
    if (s.n_t1 < 2 || s.n_t3 < 2) throw ConfigError("spectrum: n_t1 and n_t3 must be >= 2");
    if (s.pad_factor < 1 || s.pad_factor > kMaxPadFactor) {
        throw ConfigError("spectrum.pad_factor: must lie in [1, 64]");
    }
    if (!(s.prominence > 0.0) || s.prominence >= 1.0) {
        throw ConfigError("spectrum.prominence: must lie in (0, 1)");
    }
    const std::size_t n = c.numerics.n_steps;
    switch (c.task) {
        case Task::Linear:
            if (n < 2) throw ConfigError("numerics.n_steps: linear spectra need >= 2 steps");
            break;
        case Task::Spectrum2D:
        case Task::PeakScan:
            if (n < s.n_t1 + s.n_t3 - 2) {
                throw ConfigError("numerics.n_steps: 2D spectra need n_steps >= n_t1 + n_t3 - 2 = " +
                                  std::to_string(s.n_t1 + s.n_t3 - 2));
            }
            break;
        case Task::Correlation:
            if (c.correlation.pathway < 1 || c.correlation.pathway > 4) {
                throw ConfigError("correlation.pathway: must be 1, 2, 3 or 4");
            }
            if (c.correlation.t1_step > n) {
                throw ConfigError("correlation.t1_step: beyond numerics.n_steps");
            }
            for (double e : c.correlation.eps_rel) {
                if (!(e > 0.0) || e >= 1.0) throw ConfigError("correlation.eps_rel: entries in (0, 1)");
            }
            break;
    }
    if (c.task == Task::PeakScan) {
        if (c.bath.temperatures.size() < 2) {
            throw ConfigError("bath.temperatures: peak-scan needs at least two temperatures");
        }
        if (!(c.system.omega_el > 0.0)) throw ConfigError("system.omega_el: peak-scan needs omega_el > 0");
    } else if (!c.bath.temperatures.empty()) {
        throw ConfigError("bath.temperatures: only valid for task peak-scan");
    }
}

RunConfig parse_run_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const Object root(j, "");
    root.allow_only({"system", "bath", "numerics", "task", "engines", "spectrum", "correlation", "output"});

    RunConfig c;
    const Object sys = root.object("system");
    sys.allow_only({"epsilon", "omega_el"});
    c.system.epsilon = sys.positive("epsilon");
    c.system.omega_el = sys.non_negative("omega_el");

    parse_bath(root.object("bath"), c.bath);

    const Object num = root.object("numerics");
    num.allow_only({"dt", "n_steps", "dkmax", "eps_rel"});
    c.numerics.dt = num.positive("dt");
    c.numerics.n_steps = num.count("n_steps", 1);
    c.numerics.dkmax = num.count("dkmax", 1);
    c.numerics.eps_rel = num.positive("eps_rel");

    c.task = task_from_string(root.string("task"));
    c.engines = root.strings("engines");

    if (root.has("spectrum")) {
        const Object sp = root.object("spectrum");
        sp.allow_only({"n_t1", "n_t3", "transition", "half_cosine", "pad_factor", "prominence",
                      "negative_frequencies"});
        if (sp.has("n_t1")) c.spectrum.n_t1 = sp.count("n_t1", 2);
        if (sp.has("n_t3")) c.spectrum.n_t3 = sp.count("n_t3", 2);
        if (sp.has("transition")) {
            try {
                c.spectrum.transition = transition_from_string(sp.string("transition"));
            } catch (const Error& e) {
                throw ConfigError(std::string("spectrum.transition: ") + e.what());
            }
        }
        if (sp.has("half_cosine")) c.spectrum.half_cosine = sp.boolean("half_cosine");
        if (sp.has("negative_frequencies")) {
            c.spectrum.negative_frequencies = sp.boolean("negative_frequencies");
        }
        if (sp.has("pad_factor")) c.spectrum.pad_factor = sp.count("pad_factor", 1);
        if (sp.has("prominence")) c.spectrum.prominence = sp.positive("prominence");
    }
    if (root.has("correlation")) {
        const Object co = root.object("correlation");
        co.allow_only({"pathway", "t1_step", "eps_rel"});
        if (co.has("pathway")) c.correlation.pathway = static_cast<int>(co.count("pathway", 1));
        if (co.has("t1_step")) c.correlation.t1_step = co.count("t1_step", 0);
        if (co.has("eps_rel")) c.correlation.eps_rel = co.positives("eps_rel");
    }
    if (root.has("output")) {
        const Object out = root.object("output");
        out.allow_only({"directory", "formats"});
        if (out.has("directory")) c.output.directory = out.string("directory");
        if (out.has("formats")) c.output.formats = out.strings("formats");
    }
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

std::string to_json_text(const RunConfig& c, int indent) {
    ordered_json j;
    j["system"] = {{"epsilon", c.system.epsilon}, {"omega_el", c.system.omega_el}};
    ordered_json bath;
    bath["alpha"] = c.bath.alpha;
    bath["omega_c"] = c.bath.omega_c;
    if (c.bath.temperature_kelvin) {
        bath["temperature_kelvin"] = *c.bath.temperature_kelvin;
    } else {
        bath["temperature"] = c.bath.temperature;
    }
    if (!c.bath.temperatures_kelvin.empty()) {
        bath["temperatures_kelvin"] = c.bath.temperatures_kelvin;
    } else if (!c.bath.temperatures.empty()) {
        bath["temperatures"] = c.bath.temperatures;
    }
    j["bath"] = bath;
    j["numerics"] = {{"dt", c.numerics.dt},
                     {"n_steps", c.numerics.n_steps},
                     {"dkmax", c.numerics.dkmax},
                     {"eps_rel", c.numerics.eps_rel}};
    j["task"] = std::string(task_name(c.task));
    j["engines"] = c.engines;
    j["spectrum"] = {{"n_t1", c.spectrum.n_t1},
                     {"n_t3", c.spectrum.n_t3},
                     {"transition", std::string(to_string(c.spectrum.transition))},
                     {"half_cosine", c.spectrum.half_cosine},
                     {"pad_factor", c.spectrum.pad_factor},
                     {"negative_frequencies", c.spectrum.negative_frequencies},
                     {"prominence", c.spectrum.prominence}};
    j["correlation"] = {{"pathway", c.correlation.pathway},
                        {"t1_step", c.correlation.t1_step},
                        {"eps_rel", c.correlation.eps_rel}};
    j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
    return j.dump(indent);
}

}  // namespace ptspec
