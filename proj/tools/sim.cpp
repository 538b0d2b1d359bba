// sim: runs experiment specs and writes curve files.
//
//   sim run <spec.json|name> [--seed S] [--workers W] [--out DIR]
//   sim list-specs
//   sim validate <spec.json|name>
//
// SIM_WORKERS and SIM_OUT_DIR supply defaults for --workers and --out;
// SIM_SPECS_DIR replaces the bundled spec directory.
// Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "scfde/experiments.hpp"

namespace {

constexpr int exit_validation = 1;
constexpr int exit_runtime = 2;

std::size_t env_workers() {
    const char* v = std::getenv("SIM_WORKERS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const unsigned long n = std::strtoul(v, &end, 10);
    if (*end != '\0' || n == 0) throw scfde::ValidationError("SIM_WORKERS must be a positive integer");
    return n;
}

std::string env_out_dir() {
    const char* v = std::getenv("SIM_OUT_DIR");
    return v && *v ? v : "results";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SC/FDE MU-MIMO uplink detection simulator"};
    app.require_subcommand(1);

    std::string run_spec, validate_spec;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run an experiment spec (file path or bundled name)");
    run->add_option("spec", run_spec, "Spec file or bundled spec name")->required();
    run->add_option("--seed", seed, "Override the spec's seed");
    run->add_option("--workers", workers, "Worker threads (default: SIM_WORKERS or 1)")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory (default: SIM_OUT_DIR or ./results)");
    run->add_flag("-q,--quiet", quiet, "No progress output");

    auto* list = app.add_subcommand("list-specs", "List bundled experiment specs");
    auto* validate = app.add_subcommand("validate", "Check a spec without running it");
    validate->add_option("spec", validate_spec, "Spec file or bundled spec name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_validation;
    }

    try {
        if (*list) {
            for (const auto& p : scfde::bundled_specs()) {
                try {
                    const auto spec = scfde::load_spec(p);
                    std::cout << spec.name << "\t" << spec.description << "\n";
                } catch (const scfde::ValidationError& e) {
                    std::cout << p.stem().string() << "\t(invalid: " << e.what() << ")\n";
                }
            }
            return 0;
        }
        if (*validate) {
            const auto spec = scfde::load_spec(scfde::resolve_spec(validate_spec));
            std::cout << spec.name << ": ok (" << spec.detectors.size() << " detector entries, " << spec.values.size()
                      << " sweep points, method " << scfde::to_string(spec.method) << ")\n";
            return 0;
        }

        const auto spec = scfde::load_spec(scfde::resolve_spec(run_spec));
        scfde::RunOptions opts;
        opts.seed = seed;
        opts.workers = workers ? *workers : env_workers();
        opts.out_dir = out_dir ? *out_dir : env_out_dir();
        if (!quiet) opts.log = [](const std::string& s) { std::cerr << s << std::endl; };
        const auto report = scfde::run_experiment(spec, opts);
        std::cout << report.dir.string() << "\n";
        if (!quiet)
            std::cerr << spec.name << ": " << report.files.size() << " curve files in " << report.seconds << " s\n";
        return 0;
    } catch (const scfde::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
}
