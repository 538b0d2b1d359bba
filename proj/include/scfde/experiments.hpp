#pragma once

// Experiment specs and the runner that turns them into curve files.
//
// Spec files:
//   { "name": "fig5a",
//     "scenario": "scenarios/nt12_nr60_qpsk.json" | { inline scenario },
//     "detectors": [ "MF", {"first": "SimplifiedMMSE", "then": "MF", "iterations": 4} ],
//     "sweep": {"axis": "ebn0_db", "values": [...]} | {"axis": "ebn0_db", "from": -12, "to": 0, "step": 1}
//              | {"axis": "n_r", "values": [24, 36, ...]},
//     "method": "semi-analytical" | "monte-carlo" | "both" | "iber",
//     "schemes": [4, 16, 64],                      // iber only
//     "bounds": ["simo_awgn_mfb", "simo_mfb"],     // ebn0_db sweeps only
//     "realizations": 200,
//     "monte_carlo": {"min_errors": 200, "min_blocks": 20, "max_blocks": 20000, "batch": 16},
//     "seed": 1, "output": "fig5a", "runtime_budget_s": 600 }

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scfde/analysis.hpp"
#include "scfde/json_source.hpp"
#include "scfde/montecarlo.hpp"
#include "scfde/scenario.hpp"

namespace scfde {

enum class SweepAxis { ebn0_db, n_r };
enum class Method { semi_analytical, monte_carlo, both, iber };

inline std::string_view to_string(SweepAxis a) { return a == SweepAxis::ebn0_db ? "ebn0_db" : "n_r"; }

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::semi_analytical: return "semi-analytical";
        case Method::monte_carlo: return "monte-carlo";
        case Method::both: return "both";
        case Method::iber: return "iber";
    }
    return "?";
}

struct ExperimentSpec {
    std::string name;
    std::string description;
    std::string source;  // file the spec was read from, if any
    ScenarioConfig scenario;
    std::vector<DfSchedule> detectors;
    SweepAxis axis = SweepAxis::ebn0_db;
    std::vector<double> values;
    Method method = Method::semi_analytical;
    std::vector<QamScheme> iber_schemes;
    bool bound_simo_awgn_mfb = false;
    bool bound_simo_mfb = false;
    std::size_t realizations = 200;
    McConfig mc;
    std::uint64_t seed = 1;
    std::string output;
    double runtime_budget_s = 0.0;  // 0: none

    /// Everything that determines the results; hashed into the curve files.
    json config_json() const {
        json j;
        j["name"] = name;
        j["scenario"] = scenario_to_json(scenario);
        json det = json::array();
        for (const auto& d : detectors)
            det.push_back({{"first", to_string(d.first)}, {"then", to_string(d.rest)}, {"iterations", d.iterations}});
        j["detectors"] = det;
        j["sweep"] = {{"axis", to_string(axis)}, {"values", values}};
        j["method"] = to_string(method);
        json schemes = json::array();
        for (const auto& s : iber_schemes) schemes.push_back(s.order());
        j["schemes"] = schemes;
        json bounds = json::array();
        if (bound_simo_awgn_mfb) bounds.push_back("simo_awgn_mfb");
        if (bound_simo_mfb) bounds.push_back("simo_mfb");
        j["bounds"] = bounds;
        j["realizations"] = realizations;
        j["monte_carlo"] = {{"min_errors", mc.min_errors},
                            {"min_blocks", mc.min_blocks},
                            {"max_blocks", mc.max_blocks},
                            {"batch", mc.batch}};
        j["seed"] = seed;
        return j;
    }
};

namespace detail {

inline std::optional<DfSchedule> parse_schedule(const JsonSource& src, const std::string& ptr) {
    const json& v = src.at(ptr);
    if (v.is_string()) {
        auto kind = parse_detector_kind(v.get<std::string>());
        if (!kind) src.fail(ptr, "unknown detector \"" + v.get<std::string>() + "\" (expected MF, ExactMMSE or SimplifiedMMSE)");
        return DfSchedule::linear(*kind);
    }
    if (!v.is_object()) src.fail(ptr, "expected a detector name or a DF schedule object");
    for (const auto& [key, _] : v.items())
        if (key != "first" && key != "then" && key != "iterations") src.fail(ptr + "/" + key, "unknown field");
    DfSchedule s;
    for (auto [key, slot] : {std::pair{"first", &s.first}, std::pair{"then", &s.rest}}) {
        const std::string p = ptr + "/" + key;
        if (!src.has(p) || !src.at(p).is_string()) src.fail(p, "expected a detector name");
        auto kind = parse_detector_kind(src.at(p).get<std::string>());
        if (!kind) src.fail(p, "unknown detector \"" + src.at(p).get<std::string>() + "\"");
        *slot = *kind;
    }
    s.iterations = require_size(src, ptr + "/iterations", 1);
    try {
        s.validate();
    } catch (const ValidationError& e) {
        src.fail(ptr, e.field_message());
    }
    return s;
}

inline double require_number(const JsonSource& src, const std::string& ptr) {
    if (!src.has(ptr)) src.fail(ptr, "missing required field");
    if (!src.at(ptr).is_number()) src.fail(ptr, "expected a number");
    return src.at(ptr).get<double>();
}

}  // namespace detail

/// Parses and validates a spec. Relative scenario paths are resolved against
/// `base_dir`.
inline ExperimentSpec spec_from_json(const JsonSource& src, const std::filesystem::path& base_dir = {}) {
    const json& root = src.root();
    if (!root.is_object()) src.fail("", "experiment spec must be a JSON object");
    static const char* known[] = {"name",   "description", "scenario",     "detectors",  "sweep",
                                  "method", "schemes",     "bounds",       "realizations", "monte_carlo",
                                  "seed",   "output",      "runtime_budget_s"};
    for (const auto& [key, _] : root.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) src.fail("/" + key, "unknown field");

    ExperimentSpec spec;
    spec.source = src.name();
    if (!src.has("/name") || !src.at("/name").is_string() || src.at("/name").get<std::string>().empty())
        src.fail("/name", "expected a nonempty string");
    spec.name = src.at("/name").get<std::string>();
    if (spec.name.find_first_of("/\\") != std::string::npos) src.fail("/name", "must not contain path separators");
    if (src.has("/description")) {
        if (!src.at("/description").is_string()) src.fail("/description", "expected a string");
        spec.description = src.at("/description").get<std::string>();
    }

    if (!src.has("/scenario")) src.fail("/scenario", "missing required field");
    if (src.at("/scenario").is_string()) {
        std::filesystem::path p = src.at("/scenario").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        if (!std::filesystem::exists(p)) src.fail("/scenario", "scenario file not found: " + p.string());
        spec.scenario = load_scenario(p.string());
    } else {
        spec.scenario = scenario_from_json(src, "/scenario");
    }
    spec.seed = spec.scenario.seed;

    if (!src.has("/detectors") || !src.at("/detectors").is_array() || src.at("/detectors").empty())
        src.fail("/detectors", "expected a nonempty list of detectors");
    for (std::size_t i = 0; i < src.at("/detectors").size(); ++i)
        spec.detectors.push_back(*detail::parse_schedule(src, "/detectors/" + std::to_string(i)));

    if (!src.has("/method") || !src.at("/method").is_string()) src.fail("/method", "expected a method name");
    const auto method = src.at("/method").get<std::string>();
    if (method == "semi-analytical")
        spec.method = Method::semi_analytical;
    else if (method == "monte-carlo")
        spec.method = Method::monte_carlo;
    else if (method == "both")
        spec.method = Method::both;
    else if (method == "iber")
        spec.method = Method::iber;
    else
        src.fail("/method", "unknown method \"" + method + "\" (expected semi-analytical, monte-carlo, both or iber)");

    // Sweep.
    if (!src.has("/sweep") || !src.at("/sweep").is_object()) src.fail("/sweep", "expected a sweep object");
    for (const auto& [key, _] : src.at("/sweep").items())
        if (key != "axis" && key != "values" && key != "from" && key != "to" && key != "step")
            src.fail("/sweep/" + key, "unknown field");
    if (!src.has("/sweep/axis") || !src.at("/sweep/axis").is_string()) src.fail("/sweep/axis", "expected \"ebn0_db\" or \"n_r\"");
    const auto axis = src.at("/sweep/axis").get<std::string>();
    if (axis == "ebn0_db")
        spec.axis = SweepAxis::ebn0_db;
    else if (axis == "n_r")
        spec.axis = SweepAxis::n_r;
    else
        src.fail("/sweep/axis", "unknown sweep axis \"" + axis + "\" (expected ebn0_db or n_r)");
    if (src.has("/sweep/values")) {
        const json& v = src.at("/sweep/values");
        if (!v.is_array()) src.fail("/sweep/values", "expected an array");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = "/sweep/values/" + std::to_string(i);
            if (!v[i].is_number()) src.fail(p, "expected a number");
            spec.values.push_back(v[i].get<double>());
        }
    } else if (src.has("/sweep/from")) {
        const double from = detail::require_number(src, "/sweep/from");
        const double to = detail::require_number(src, "/sweep/to");
        const double step = detail::require_number(src, "/sweep/step");
        if (!(step > 0.0)) src.fail("/sweep/step", "step must be positive");
        if (to < from) src.fail("/sweep/to", "\"to\" is below \"from\"");
        for (std::size_t i = 0;; ++i) {
            const double x = from + static_cast<double>(i) * step;
            if (x > to + 1e-9 * step) break;
            spec.values.push_back(x);
        }
    }
    if (spec.values.empty()) src.fail("/sweep", "empty sweep");
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const std::string p = src.has("/sweep/values") ? "/sweep/values/" + std::to_string(i) : "/sweep";
        const double x = spec.values[i];
        if (spec.axis == SweepAxis::n_r) {
            if (x != std::floor(x) || x < static_cast<double>(spec.scenario.n_t))
                src.fail(p, "NR values must be integers no smaller than NT = " + std::to_string(spec.scenario.n_t));
        } else if (!std::isfinite(x) && !(std::isinf(x) && x > 0)) {
            src.fail(p, "Eb/N0 must be finite");
        }
    }

    // Method and axis compatibility.
    if (spec.method == Method::iber) {
        if (spec.axis != SweepAxis::n_r) src.fail("/sweep/axis", "iber runs sweep the n_r axis");
    } else if (spec.axis != SweepAxis::ebn0_db) {
        src.fail("/sweep/axis", "n_r sweeps are only supported by the iber method");
    }
    for (std::size_t i = 0; i < spec.detectors.size(); ++i) {
        if (spec.detectors[i].iterations > 1 &&
            (spec.method == Method::semi_analytical || spec.method == Method::iber))
            src.fail("/detectors/" + std::to_string(i), "DF schedules are evaluated by monte-carlo only");
    }

    if (src.has("/schemes")) {
        if (spec.method != Method::iber) src.fail("/schemes", "scheme overrides apply to iber runs only");
        const json& v = src.at("/schemes");
        if (!v.is_array() || v.empty()) src.fail("/schemes", "expected a nonempty list of QAM orders");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = "/schemes/" + std::to_string(i);
            if (!v[i].is_number_integer()) src.fail(p, "expected 4, 16 or 64");
            try {
                spec.iber_schemes.push_back(QamScheme::from_order(v[i].get<int>()));
            } catch (const ValidationError& e) {
                src.fail(p, e.field_message());
            }
        }
    }

    if (src.has("/bounds")) {
        const json& v = src.at("/bounds");
        if (!v.is_array()) src.fail("/bounds", "expected a list of bound names");
        if (!v.empty() && spec.axis != SweepAxis::ebn0_db) src.fail("/bounds", "bounds need an ebn0_db sweep");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = "/bounds/" + std::to_string(i);
            if (v[i] == "simo_awgn_mfb")
                spec.bound_simo_awgn_mfb = true;
            else if (v[i] == "simo_mfb")
                spec.bound_simo_mfb = true;
            else
                src.fail(p, "unknown bound (expected simo_awgn_mfb or simo_mfb)");
        }
    }

    if (src.has("/realizations")) spec.realizations = detail::require_size(src, "/realizations", 1);
    if (src.has("/monte_carlo")) {
        if (!src.at("/monte_carlo").is_object()) src.fail("/monte_carlo", "expected an object");
        for (const auto& [key, _] : src.at("/monte_carlo").items()) {
            const std::string p = "/monte_carlo/" + key;
            if (key == "min_errors")
                spec.mc.min_errors = detail::require_size(src, p, 1);
            else if (key == "min_blocks")
                spec.mc.min_blocks = detail::require_size(src, p, 0);
            else if (key == "max_blocks")
                spec.mc.max_blocks = detail::require_size(src, p, 1);
            else if (key == "batch")
                spec.mc.batch = detail::require_size(src, p, 1);
            else
                src.fail(p, "unknown field");
        }
        try {
            spec.mc.validate();
        } catch (const ValidationError& e) {
            src.fail("/monte_carlo", e.field_message());
        }
    }
    if (src.has("/seed")) {
        if (!src.at("/seed").is_number_unsigned()) src.fail("/seed", "expected a nonnegative integer");
        spec.seed = src.at("/seed").get<std::uint64_t>();
    }
    spec.output = spec.name;
    if (src.has("/output")) {
        if (!src.at("/output").is_string() || src.at("/output").get<std::string>().empty())
            src.fail("/output", "expected a nonempty directory name");
        spec.output = src.at("/output").get<std::string>();
    }
    if (src.has("/runtime_budget_s")) spec.runtime_budget_s = detail::require_number(src, "/runtime_budget_s");
    spec.scenario.seed = spec.seed;
    return spec;
}

inline ExperimentSpec load_spec(const std::filesystem::path& path) {
    return spec_from_json(JsonSource::load(path.string()), path.parent_path());
}

/// Hash in the form git uses for blobs: SHA-1 of "blob <size>\0<content>".
inline std::string git_blob_hash(const std::string& content) {
    const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1) throw Error("SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::filesystem::path out_dir = "results";
    std::function<void(const std::string&)> log;
};

struct CurveFile {
    std::string file;
    std::string curve;
    std::string method;
    std::size_t points = 0;
};

struct RunReport {
    std::filesystem::path dir;
    std::vector<CurveFile> files;
    std::string config_hash;
    std::uint64_t seed = 0;
    double seconds = 0.0;
};

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string safe_file_name(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

inline void write_curve_csv(const std::filesystem::path& path, const ExperimentSpec& spec, const BerCurve& curve,
                            std::string_view method, const std::string& hash, std::size_t n_inputs) {
    std::ostringstream out;
    out << "# experiment: " << spec.name << '\n';
    out << "# curve: " << curve.label << '\n';
    out << "# method: " << method << '\n';
    out << "# seed: " << curve.seed << '\n';
    out << "# realizations: " << curve.n_realizations << '\n';
    out << "# config_hash: " << hash << '\n';
    std::string low;
    for (const auto& p : curve.points)
        if (p.low_confidence) low += (low.empty() ? "" : " ") + fmt_double(p.x);
    if (!low.empty()) out << "# low_confidence: " << low << '\n';
    out << curve.axis;
    for (std::size_t j = 0; j < n_inputs; ++j) out << ",ber_" << (j + 1);
    out << ",aggregate_ber,stderr,n_realizations,n_bits\n";
    for (const auto& p : curve.points) {
        out << fmt_double(p.x);
        for (std::size_t j = 0; j < n_inputs; ++j) out << ',' << fmt_double(j < p.ber.size() ? p.ber[j] : 0.0);
        out << ',' << fmt_double(p.aggregate) << ',' << fmt_double(p.std_error) << ',' << p.count << ',' << p.n_bits
            << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << out.str();
    if (!f) throw Error("write failed: " + path.string());
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Runs every curve of the spec and writes one CSV per curve plus
/// manifest.json into `out_dir / spec.output`.
inline RunReport run_experiment(ExperimentSpec spec, const RunOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = detail::utc_now();
    if (opts.seed) {
        spec.seed = *opts.seed;
        spec.scenario.seed = *opts.seed;
    }
    const std::size_t workers = std::max<std::size_t>(1, opts.workers);
    spec.mc.workers = workers;
    auto log = [&](const std::string& s) {
        if (opts.log) opts.log(spec.name + ": " + s);
    };

    RunReport report;
    report.seed = spec.seed;
    report.config_hash = git_blob_hash(spec.config_json().dump());
    report.dir = opts.out_dir / spec.output;
    std::filesystem::create_directories(report.dir);

    const ScenarioConfig& cfg = spec.scenario;
    auto emit = [&](BerCurve curve, std::string_view method, const std::string& tag, std::size_t n_inputs) {
        const std::string file = detail::safe_file_name(curve.label + "_" + tag) + ".csv";
        curve.seed = spec.seed;
        detail::write_curve_csv(report.dir / file, spec, curve, method, report.config_hash, n_inputs);
        report.files.push_back({file, curve.label, std::string(method), curve.points.size()});
        log("wrote " + file);
    };

    if (spec.method == Method::iber) {
        std::vector<DetectorKind> kinds;
        for (const auto& d : spec.detectors) kinds.push_back(d.first);
        const std::vector<QamScheme> as = spec.iber_schemes;
        const std::size_t n_sets = as.empty() ? 1 : as.size();
        // curves[kind][scheme]
        std::vector<std::vector<BerCurve>> curves(kinds.size(), std::vector<BerCurve>(n_sets));
        for (double nr : spec.values) {
            ScenarioConfig c = cfg;
            c.n_r = static_cast<std::size_t>(nr);
            log("IBER at NR = " + std::to_string(c.n_r) + " (" + std::to_string(spec.realizations) + " realizations)");
            const auto res = ensemble_iber(c, kinds, spec.realizations, workers, as);
            for (std::size_t d = 0; d < kinds.size(); ++d)
                for (std::size_t s = 0; s < n_sets; ++s) curves[d][s].points.push_back(res[d][s]);
        }
        for (std::size_t d = 0; d < kinds.size(); ++d) {
            for (std::size_t s = 0; s < n_sets; ++s) {
                BerCurve& c = curves[d][s];
                c.method = CurveMethod::semi_analytical;
                c.axis = "n_r";
                c.label = "IBER-" + std::string(to_string(kinds[d]));
                if (!as.empty()) c.label += "-" + as[s].name();
                c.n_realizations = spec.realizations;
                emit(std::move(c), "iber", "iber", cfg.n_t);
            }
        }
    } else {
        const auto& grid = spec.values;
        for (const auto& d : spec.detectors) {
            const bool linear = d.iterations == 1;
            if (linear && spec.method != Method::monte_carlo) {
                log(std::string(to_string(d.first)) + " semi-analytical (" + std::to_string(spec.realizations) +
                    " realizations)");
                emit(semi_analytical_ber(cfg, d.first, grid, spec.realizations, workers), "semi-analytical", "sa",
                     cfg.n_t);
            }
            if (spec.method == Method::monte_carlo || spec.method == Method::both) {
                log(d.label() + " monte-carlo");
                auto res = run_mc(cfg, d, grid, spec.mc, spec.seed);
                for (auto& c : res.per_iteration) emit(std::move(c), "monte-carlo", "mc", cfg.n_t);
            }
        }
        if (spec.bound_simo_awgn_mfb) {
            BerCurve c;
            c.method = CurveMethod::bound;
            c.label = "SIMO-AWGN-MFB";
            const auto schemes = cfg.schemes();
            for (double x : grid) {
                const auto ebn0 = per_input_ebn0(cfg, x);
                std::vector<double> ber(cfg.n_t);
                for (std::size_t j = 0; j < cfg.n_t; ++j) ber[j] = simo_awgn_mfb(schemes[j], cfg.n_r, cfg.eta(), ebn0[j]);
                BerPoint p;
                p.x = x;
                p.aggregate = aggregate_ber(ber, schemes);
                p.ber = std::move(ber);
                c.points.push_back(std::move(p));
            }
            emit(std::move(c), "bound", "bound", cfg.n_t);
        }
        if (spec.bound_simo_mfb) {
            log("SIMO-MFB (" + std::to_string(spec.realizations) + " realizations)");
            emit(semi_analytical_simo_mfb(cfg, grid, spec.realizations, workers), "bound", "bound", cfg.n_t);
        }
    }

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["name"] = spec.name;
    manifest["description"] = spec.description;
    manifest["spec_source"] = spec.source;
    manifest["config_hash"] = report.config_hash;
    manifest["config"] = spec.config_json();
    manifest["seed"] = spec.seed;
    manifest["workers"] = workers;
    manifest["started_utc"] = started;
    manifest["elapsed_seconds"] = report.seconds;
    if (spec.runtime_budget_s > 0.0) {
        manifest["runtime_budget_s"] = spec.runtime_budget_s;
        manifest["within_budget"] = report.seconds <= spec.runtime_budget_s;
    }
    json files = json::array();
    for (const auto& f : report.files)
        files.push_back({{"file", f.file}, {"curve", f.curve}, {"method", f.method}, {"points", f.points}});
    manifest["files"] = files;
    std::ofstream m(report.dir / "manifest.json");
    if (!m) throw Error("cannot write manifest in " + report.dir.string());
    m << manifest.dump(2) << '\n';
    return report;
}

/// Bundled spec directory: SIM_SPECS_DIR if set, else the source tree's.
inline std::filesystem::path specs_dir() {
    if (const char* env = std::getenv("SIM_SPECS_DIR"); env && *env) return env;
#ifdef SCFDE_SPECS_DIR
    return SCFDE_SPECS_DIR;
#else
    return "specs";
#endif
}

/// A path to a spec file, or the name of a bundled spec.
inline std::filesystem::path resolve_spec(const std::string& arg) {
    std::filesystem::path p(arg);
    if (std::filesystem::exists(p)) return p;
    auto bundled = specs_dir() / (arg + ".json");
    if (std::filesystem::exists(bundled)) return bundled;
    throw ValidationError("no spec file or bundled spec named \"" + arg + "\"");
}

inline std::vector<std::filesystem::path> bundled_specs() {
    std::vector<std::filesystem::path> out;
    const auto dir = specs_dir();
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace scfde
