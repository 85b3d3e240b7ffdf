#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ptspec/errors.hpp"
#include "ptspec/run_config.hpp"
#include "ptspec/runner.hpp"

using namespace ptspec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json base_config() {
    return json::parse(R"({
        "system": {"epsilon": 5.0, "omega_el": 2.0},
        "bath": {"alpha": 0.1, "omega_c": 3.04, "temperature": 13.09},
        "numerics": {"dt": 0.1, "n_steps": 12, "dkmax": 12, "eps_rel": 1e-6},
        "task": "linear",
        "engines": ["pt", "wcme"]
    })");
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ptspec_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const fs::path& config, const RunOptions& options, std::string* err_text = nullptr) {
    std::ostringstream log, err;
    const int code = run_main(config, options, log, err);
    if (err_text) *err_text = err.str();
    return code;
}

}  // namespace

TEST_CASE("configuration parse and canonical round trip") {
    const RunConfig c = parse_run_config(base_config().dump());
    CHECK(c.system.epsilon == 5.0);
    CHECK(c.numerics.n_steps == 12);
    CHECK(c.task == Task::Linear);
    CHECK(c.engines == std::vector<std::string>{"pt", "wcme"});
    CHECK(c.spectrum.pad_factor == 4);
    CHECK(parse_run_config(to_json_text(c)) == c);

    json k = base_config();
    k["bath"].erase("temperature");
    k["bath"]["temperature_kelvin"] = 100.0;
    const RunConfig ck = parse_run_config(k.dump());
    CHECK(ck.bath.temperature == doctest::Approx(13.09).epsilon(1e-3));
    CHECK(parse_run_config(to_json_text(ck)) == ck);

    json f = base_config();
    f["spectrum"] = {{"negative_frequencies", true}};
    const RunConfig cf = parse_run_config(f.dump());
    CHECK(cf.spectrum.negative_frequencies);
    CHECK(parse_run_config(to_json_text(cf)) == cf);
}

TEST_CASE("configuration rejects malformed input") {
    auto rejects = [](const json& j) { CHECK_THROWS_AS(parse_run_config(j.dump()), ConfigError); };
    json j = base_config();
    j["bogus"] = 1;
    rejects(j);
    j = base_config();
    j["numerics"]["dtt"] = 0.1;
    rejects(j);
    j = base_config();
    j["numerics"]["dt"] = -0.1;
    rejects(j);
    j = base_config();
    j["numerics"]["n_steps"] = 0;
    rejects(j);
    j = base_config();
    j["numerics"]["eps_rel"] = 1.5;
    rejects(j);
    j = base_config();
    j["engines"] = json::array({"pt", "pt"});
    rejects(j);
    j = base_config();
    j["engines"] = json::array({"hmm"});
    rejects(j);
    j = base_config();
    j["task"] = "spectrum2d";
    j["spectrum"] = {{"n_t1", 10}, {"n_t3", 10}};
    rejects(j);  // needs n_steps >= 18
    j = base_config();
    j["bath"]["temperature_kelvin"] = 100.0;
    rejects(j);
    CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("exit codes and error reporting") {
    const fs::path dir = scratch("exit");
    std::string err;

    json bad = base_config();
    bad["numerics"]["dt"] = 0.0;
    CHECK(run(write_config(dir, bad), {}, &err) == kExitConfig);
    const json e = json::parse(err);
    CHECK(e["status"] == "error");
    CHECK(e["exit_code"] == 2);
    CHECK(e["kind"] == "config");

    CHECK(run(dir / "missing.json", {}, &err) == kExitIo);
    CHECK(json::parse(err)["kind"] == "io");

    // a cache file that is not a process tensor
    json good = base_config();
    good["engines"] = json::array({"pt"});
    good["output"] = {{"directory", (dir / "out").string()}};
    const BathSpec b{0.1, 3.04, 13.09};
    fs::create_directories(dir / "cache");
    std::ofstream(dir / "cache" / pt_cache_name(b, 0.1, 12, 12, 1e-6)) << "garbage";
    RunOptions opts;
    opts.pt_cache = dir / "cache";
    CHECK(run(write_config(dir, good), opts, &err) == kExitIo);
    CHECK(json::parse(err)["kind"] == "pt-cache");
    fs::remove_all(dir);
}

TEST_CASE("run outputs, manifest and cached determinism") {
    const fs::path dir = scratch("determinism");
    json j = base_config();
    j["output"] = {{"directory", (dir / "a").string()}, {"formats", {"csv", "plt"}}};
    const fs::path config = write_config(dir, j);
    RunOptions opts;
    opts.pt_cache = dir / "cache";
    REQUIRE(run(config, opts) == kExitOk);
    opts.output = dir / "b";
    REQUIRE(run(config, opts) == kExitOk);

    const json m1 = json::parse(slurp(dir / "a" / "manifest.json"));
    const json m2 = json::parse(slurp(dir / "b" / "manifest.json"));
    CHECK(m1["program"] == "ptspec");
    CHECK(m1["window"]["pad_factor"] == 4);
    CHECK(m1["process_tensors"][0]["cache_hit"] == false);
    CHECK(m2["process_tensors"][0]["cache_hit"] == true);
    CHECK(m1["config_sha256"].get<std::string>().size() == 64);

    std::size_t csvs = 0;
    for (const auto& out : m1["outputs"]) {
        const std::string name = out["file"];
        CHECK(out["sha256"] == sha256_file(dir / "a" / name));
        if (name.ends_with(".csv")) {
            ++csvs;
            CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
        }
    }
    CHECK(csvs == 2);

    // a cached tensor with different parameters is refused
    j["numerics"]["eps_rel"] = 1e-7;
    const BathSpec b{0.1, 3.04, 13.09};
    fs::copy_file(dir / "cache" / pt_cache_name(b, 0.1, 12, 12, 1e-6), dir / "cache" / pt_cache_name(b, 0.1, 12, 12, 1e-7));
    opts.output = dir / "c";
    CHECK(run(write_config(dir, j), opts) == kExitIo);
    opts.force_rebuild_pt = true;
    CHECK(run(write_config(dir, j), opts) == kExitOk);
    fs::remove_all(dir);
}

TEST_CASE("helpers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(13.09) == "13.09");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(kKelvinToInversePs * 100.0 == doctest::Approx(13.0920).epsilon(1e-4));
}
