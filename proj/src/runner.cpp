#include "ptspec/runner.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>
#include <openssl/evp.h>

#include "ptspec/errors.hpp"
#include "ptspec/master_equations.hpp"
#include "ptspec/process_tensor.hpp"
#include "ptspec/spectroscopy.hpp"

namespace ptspec {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kVersion = "0.1.0";

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
}

struct PtHandle {
    std::shared_ptr<const ProcessTensorMPO> pt;
    ordered_json record;
};

// Every emitted file, its hash and the non-fatal warnings of the run.
class Session {
public:
    Session(RunConfig config, RunOptions options, std::ostream& log)
        : config_(std::move(config)), options_(std::move(options)), log_(log) {
        dir_ = fs::path(config_.output.directory);
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) {
            throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
        }
    }

    const RunConfig& config() const { return config_; }

    void emit(const std::string& name, const std::string& bytes) {
        write_file(dir_ / name, bytes);
        outputs_.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}});
        log_ << "wrote " << (dir_ / name).string() << '\n';
    }

    void warn(const std::string& w) {
        warnings_.push_back(w);
        log_ << "warning: " << w << '\n';
    }

    void timing(const std::string& what, double seconds) { timings_[what] = seconds; }

    std::ostream& log() { return log_; }

    PtHandle process_tensor(const BathSpec& b, double eps_rel) {
        const auto& n = config_.numerics;
        const auto start = std::chrono::steady_clock::now();
        ordered_json rec;
        rec["alpha"] = b.alpha;
        rec["omega_c"] = b.omega_c;
        rec["temperature"] = b.temperature;
        rec["dt"] = n.dt;
        rec["n_steps"] = n.n_steps;
        rec["dkmax"] = n.dkmax;
        rec["eps_rel"] = eps_rel;

        std::optional<fs::path> file;
        if (options_.pt_cache) {
            std::error_code ec;
            fs::create_directories(*options_.pt_cache, ec);
            if (ec) throw IoError("cannot create PT cache directory " + options_.pt_cache->string());
            file = *options_.pt_cache / pt_cache_name(b, n.dt, n.n_steps, n.dkmax, eps_rel);
        }
        std::shared_ptr<ProcessTensorMPO> pt;
        bool hit = false;
        if (file && !options_.force_rebuild_pt && fs::exists(*file)) {
            auto loaded = std::make_shared<ProcessTensorMPO>(load_pt(*file));
            if (!loaded->bath || !(*loaded->bath == b) || loaded->dt != n.dt ||
                loaded->n_steps != n.n_steps || loaded->dkmax != n.dkmax || loaded->eps_rel != eps_rel) {
                throw LoadError("cached process tensor " + file->string() +
                                " does not match the requested parameters; rerun with --force-rebuild-pt");
            }
            pt = std::move(loaded);
            hit = true;
            log_ << "loaded process tensor " << file->string() << '\n';
        } else {
            log_ << "building process tensor (alpha " << b.alpha << ", T " << b.temperature << ", "
                 << n.n_steps << " steps, eps_rel " << eps_rel << ")\n";
            PtBuildReport report;
            pt = std::make_shared<ProcessTensorMPO>(
                build_pt_mpo(b, n.dt, n.n_steps, n.dkmax, eps_rel, &report));
            for (const auto& w : report.warnings) warnings_.push_back("process_tensor: " + w);
            rec["build_seconds"] = report.wall_seconds;
            if (file) save_pt(*pt, *file);
        }
        rec["cache_hit"] = hit;
        rec["peak_bond_dim"] = pt->max_bond_dim();
        if (file) {
            rec["file"] = file->string();
            rec["sha256"] = sha256_file(*file);
        }
        rec["seconds"] = seconds_since(start);
        pts_.push_back(rec);
        return {pt, rec};
    }

    void write_manifest() {
        ordered_json m;
        m["program"] = "ptspec";
        m["version"] = std::string(kVersion);
        m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                             "." + std::to_string(EIGEN_MINOR_VERSION);
        const std::string canonical = to_json_text(config_, -1);
        m["config_sha256"] = sha256_hex(canonical);
        m["config"] = ordered_json::parse(canonical);
        m["window"] = {{"half_cosine", config_.spectrum.half_cosine},
                       {"pad_factor", config_.spectrum.pad_factor},
                       {"negative_frequencies", config_.spectrum.negative_frequencies}};
        m["process_tensors"] = pts_;
        m["wall_seconds"] = timings_;
        m["outputs"] = outputs_;
        m["warnings"] = warnings_;
        write_file(dir_ / "manifest.json", m.dump(2) + "\n");
        log_ << "wrote " << (dir_ / "manifest.json").string() << '\n';
    }

private:
    RunConfig config_;
    RunOptions options_;
    std::ostream& log_;
    fs::path dir_;
    ordered_json outputs_ = ordered_json::array();
    ordered_json pts_ = ordered_json::array();
    ordered_json timings_ = ordered_json::object();
    std::vector<std::string> warnings_;
};

std::unique_ptr<CorrelationEngine> make_engine(Session& session, const std::string& name,
                                               const BathSpec& b, double eps_rel) {
    const auto& c = session.config();
    const SystemModel s = SystemModel::with_bath(c.system.epsilon, c.system.omega_el, b);
    if (name == "pt") return std::make_unique<PtEngine>(session.process_tensor(b, eps_rel).pt, s);
    if (name == "wcme") {
        return std::make_unique<MasterEquationEngine>(build_wcme(s, b), c.numerics.dt, c.numerics.n_steps);
    }
    return std::make_unique<MasterEquationEngine>(build_pme(s, b), c.numerics.dt, c.numerics.n_steps);
}

Window window_of(const RunConfig& c) {
    return {c.spectrum.half_cosine, c.spectrum.pad_factor, c.spectrum.negative_frequencies};
}
PeakOptions peak_options_of(const RunConfig& c) { return {c.spectrum.prominence}; }

ordered_json optional_number(const std::optional<double>& x) {
    return x ? ordered_json(*x) : ordered_json(nullptr);
}

ordered_json report_json(const PeakReport& r) {
    ordered_json peaks = ordered_json::array();
    for (const auto& p : r.diagonal_peaks) peaks.push_back({{"position", p.position}, {"height", p.height}});
    ordered_json j;
    j["diagonal_peaks"] = peaks;
    j["splitting"] = optional_number(r.splitting);
    j["cross_peaks_present"] = r.cross_peaks_present;
    j["amplitude_ratio"] = optional_number(r.amplitude_ratio);
    return j;
}

std::string csv_rows(const std::string& header, std::size_t rows,
                     const std::function<void(std::size_t, std::string&)>& row) {
    std::string out = header + "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        row(i, out);
        out += '\n';
    }
    return out;
}

void append_fields(std::string& out, std::initializer_list<double> xs) {
    bool first = true;
    for (double x : xs) {
        if (!first) out += ',';
        out += format_number(x);
        first = false;
    }
}

std::string linear_plot(const std::string& csv, const std::string& engine) {
    return "set datafile separator ','\n"
           "set xlabel 'omega (ps^-1)'\n"
           "set ylabel 'A(omega) (arb. units)'\n"
           "plot '" + csv + "' every ::1 using 1:2 with lines title '" + engine + "'\n";
}

std::string map_plot(const std::string& csv, const std::string& engine) {
    return "set datafile separator ','\n"
           "set xlabel 'omega_exc (ps^-1)'\n"
           "set ylabel 'omega_detec (ps^-1)'\n"
           "set title '" + engine + "'\n"
           "set size square\n"
           "plot '" + csv + "' every ::1 using 1:2:3 with image notitle\n";
}

void run_linear(Session& session) {
    const auto& c = session.config();
    for (const auto& name : c.engines) {
        const auto start = std::chrono::steady_clock::now();
        const auto engine = make_engine(session, name, c.bath_spec(), c.numerics.eps_rel);
        const auto series = linear_response(*engine, c.numerics.n_steps + 1, c.spectrum.transition);
        const auto sp = absorption_spectrum(series, window_of(c));
        const std::string csv = "linear_" + name + ".csv";
        session.emit(csv, csv_rows("omega,absorption", sp.omega.size(), [&](std::size_t i, std::string& o) {
                         append_fields(o, {sp.omega[i], sp.values[i]});
                     }));
        session.emit("peaks_" + name + ".json",
                     report_json(peak_analysis(sp, peak_options_of(c))).dump(2) + "\n");
        if (c.wants_format("plt")) session.emit("linear_" + name + ".plt", linear_plot(csv, name));
        session.timing(name, seconds_since(start));
    }
}

Spectrum2D spectrum_for(Session& session, const std::string& name, const BathSpec& b) {
    const auto& c = session.config();
    const auto engine = make_engine(session, name, b, c.numerics.eps_rel);
    const auto rs = response_pathways(*engine, c.spectrum.n_t1, c.spectrum.n_t3, c.spectrum.transition);
    return spectrum_2d(rs, window_of(c));
}

void run_spectrum2d(Session& session) {
    const auto& c = session.config();
    for (const auto& name : c.engines) {
        const auto start = std::chrono::steady_clock::now();
        const Spectrum2D sp = spectrum_for(session, name, c.bath_spec());
        const std::string csv = "spectrum2d_" + name + ".csv";
        const auto cols = static_cast<std::size_t>(sp.total.cols());
        session.emit(csv, csv_rows("omega_exc,omega_detec,value", sp.w_exc.size() * cols,
                                   [&](std::size_t k, std::string& o) {
                                       const std::size_t i = k / cols;
                                       const std::size_t j = k % cols;
                                       append_fields(o, {sp.w_exc[i], sp.w_det[j],
                                                         sp.total(static_cast<Eigen::Index>(i),
                                                                  static_cast<Eigen::Index>(j))});
                                   }));
        const PeakReport report = peak_analysis(sp, peak_options_of(c));
        ordered_json j = report_json(report);
        if (!report.diagonal_peaks.empty()) {
            try {
                const PeakWidths w = peak_widths(sp, report.diagonal_peaks.front().position);
                j["top_peak_widths"] = {{"diagonal", w.diagonal}, {"antidiagonal", w.antidiagonal}};
            } catch (const DomainError& e) {
                session.warn(std::string("spectroscopy: ") + e.what());
            }
        }
        session.emit("peaks_" + name + ".json", j.dump(2) + "\n");
        if (c.wants_format("plt")) session.emit("spectrum2d_" + name + ".plt", map_plot(csv, name));
        session.timing(name, seconds_since(start));
    }
}

void run_correlation(Session& session) {
    const auto& c = session.config();
    const InterventionSchedule sched =
        pathway_schedule(c.correlation.pathway, c.correlation.t1_step, c.spectrum.transition);
    for (const auto& name : c.engines) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<double> eps{c.numerics.eps_rel};
        if (name == "pt") {
            eps.insert(eps.end(), c.correlation.eps_rel.begin(), c.correlation.eps_rel.end());
            std::sort(eps.begin(), eps.end(), std::greater<>());
            eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
        }
        std::vector<CorrelationSeries> runs;
        for (double e : eps) runs.push_back(make_engine(session, name, c.bath_spec(), e)->correlate(sched));
        const std::size_t len = runs.front().values.size();
        std::string body = (name == "pt" ? "eps_rel,time,re,im\n" : "time,re,im\n");
        for (std::size_t r = 0; r < runs.size(); ++r) {
            for (std::size_t k = 0; k < len; ++k) {
                if (name == "pt") body += format_number(eps[r]) + ",";
                append_fields(body, {runs[r].times[k], runs[r].values[k].real(), runs[r].values[k].imag()});
                body += '\n';
            }
        }
        session.emit("correlation_" + name + ".csv", body);
        if (runs.size() > 1) {
            // every threshold against the tightest one
            const auto& ref = runs.back().values;
            std::string diff = "eps_rel,max_abs_difference\n";
            for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
                double worst = 0.0;
                for (std::size_t k = 0; k < len; ++k) worst = std::max(worst, std::abs(runs[r].values[k] - ref[k]));
                append_fields(diff, {eps[r], worst});
                diff += '\n';
            }
            session.emit("convergence_" + name + ".csv", diff);
        }
        session.timing(name, seconds_since(start));
    }
}

void run_peak_scan(Session& session) {
    const auto& c = session.config();
    const double omega = c.system.omega_el;
    const bool with_pt = std::find(c.engines.begin(), c.engines.end(), "pt") != c.engines.end();
    const bool with_wcme = std::find(c.engines.begin(), c.engines.end(), "wcme") != c.engines.end();
    std::string header = "temperature";
    if (with_pt) header += ",splitting_pt_minus_2omega,amplitude_ratio_pt";
    header += ",splitting_wcme_analytic_minus_2omega";
    if (with_wcme) header += ",amplitude_ratio_wcme";
    std::string body = header + "\n";
    const auto start = std::chrono::steady_clock::now();
    for (double t : c.bath.temperatures) {
        BathSpec b = c.bath_spec();
        b.temperature = t;
        session.log() << "peak scan: T = " << t << '\n';
        body += format_number(t);
        auto pair = [&](const std::string& name) {
            const PeakReport r = peak_analysis(spectrum_for(session, name, b), peak_options_of(c));
            if (!r.splitting) session.warn("spectroscopy: fewer than two diagonal peaks at T = " + format_number(t));
            std::string cells = ",";
            cells += r.splitting ? format_number(*r.splitting - 2.0 * omega) : "nan";
            cells += ",";
            cells += r.amplitude_ratio ? format_number(*r.amplitude_ratio) : "nan";
            return cells;
        };
        if (with_pt) body += pair("pt");
        body += "," + format_number(eigenstate_splitting(b, omega) - 2.0 * omega);
        if (with_wcme) {
            const std::string cells = pair("wcme");
            body += cells.substr(cells.find(',', 1));
        }
        body += '\n';
    }
    session.emit("peak_scan.csv", body);
    session.timing("peak_scan", seconds_since(start));
}

struct Failure {
    int code;
    std::string kind;
};

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return sha256_hex(bytes.str());
}

std::string pt_cache_name(const BathSpec& b, double dt, std::size_t n_steps, std::size_t dkmax,
                          double eps_rel) {
    const std::string key = "ptmpo1|" + format_number(b.alpha) + "|" + format_number(b.omega_c) + "|" +
                            format_number(b.temperature) + "|" + format_number(dt) + "|" +
                            std::to_string(n_steps) + "|" + std::to_string(dkmax) + "|" +
                            format_number(eps_rel);
    return "pt_" + sha256_hex(key).substr(0, 20) + ".ptmpo";
}

void execute(const RunConfig& config, const RunOptions& options, std::ostream& log) {
    RunConfig c = config;
    if (!options.engines.empty()) c.engines = options.engines;
    if (options.output) c.output.directory = options.output->string();
    validate(c);
    Session session(c, options, log);
    const auto start = std::chrono::steady_clock::now();
    switch (c.task) {
        case Task::Linear: run_linear(session); break;
        case Task::Spectrum2D: run_spectrum2d(session); break;
        case Task::Correlation: run_correlation(session); break;
        case Task::PeakScan: run_peak_scan(session); break;
    }
    session.timing("total", seconds_since(start));
    session.write_manifest();
}

int run_main(const fs::path& config_path, const RunOptions& options, std::ostream& log, std::ostream& err) {
    Failure f{0, ""};
    std::string message;
    try {
        execute(load_run_config(config_path), options, log);
        return kExitOk;
    } catch (const ConfigError& e) {
        f = {kExitConfig, "config"}, message = e.what();
    } catch (const DomainError& e) {
        f = {kExitConfig, "domain"}, message = e.what();
    } catch (const ScheduleError& e) {
        f = {kExitConfig, "schedule"}, message = e.what();
    } catch (const ValidationError& e) {
        f = {kExitConfig, "validation"}, message = e.what();
    } catch (const NumericError& e) {
        f = {kExitNonConvergence, "non-convergence"}, message = e.what();
    } catch (const ResourceError& e) {
        f = {kExitNonConvergence, "resource"}, message = e.what();
    } catch (const LoadError& e) {
        f = {kExitIo, "pt-cache"}, message = e.what();
    } catch (const IoError& e) {
        f = {kExitIo, "io"}, message = e.what();
    } catch (const std::exception& e) {
        f = {1, "internal"}, message = e.what();
    }
    ordered_json j;
    j["status"] = "error";
    j["kind"] = f.kind;
    j["exit_code"] = f.code;
    j["message"] = message;
    err << j.dump() << '\n';
    return f.code;
}

}  // namespace ptspec
