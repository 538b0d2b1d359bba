#include <gtest/gtest.h>

#include <fstream>

#include "scfde/experiments.hpp"

using namespace scfde;

namespace {

const char* tiny_scenario = R"("scenario": {"N": 32, "Ls": 8, "NT": 2, "NR": 3,
                 "per_antenna": [{"qam": 4, "count": 2}], "profile": "linear"})";

std::string tiny_spec(const std::string& body) {
    return "{\n\"name\": \"tiny\",\n" + std::string(tiny_scenario) + ",\n" + body + "\n}\n";
}

ExperimentSpec parse(const std::string& text) { return spec_from_json(JsonSource::parse(text, "t.json")); }

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ValidationError& e) {
        return e.line();
    }
    return 0;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Spec, ParsesRangeAndSchedules) {
    const auto spec = parse(tiny_spec(R"("detectors": ["MF", {"first": "ExactMMSE", "then": "SimplifiedMMSE", "iterations": 3}],
"sweep": {"axis": "ebn0_db", "from": -2, "to": 1, "step": 0.5},
"method": "monte-carlo", "seed": 5)"));
    EXPECT_EQ(spec.values, (std::vector<double>{-2, -1.5, -1, -0.5, 0, 0.5, 1}));
    ASSERT_EQ(spec.detectors.size(), 2u);
    EXPECT_EQ(spec.detectors[1].iterations, 3u);
    EXPECT_EQ(spec.detectors[1].rest, DetectorKind::SimplifiedMMSE);
    EXPECT_EQ(spec.seed, 5u);
    EXPECT_EQ(spec.scenario.seed, 5u);
    EXPECT_EQ(spec.output, "tiny");
}

TEST(Spec, EmptySweepIsRejected) {
    const auto text = tiny_spec("\"detectors\": [\"MF\"],\n\"sweep\": {\"axis\": \"ebn0_db\", \"values\": []},\n"
                                "\"method\": \"semi-analytical\"");
    EXPECT_THROW(parse(text), ValidationError);
    EXPECT_EQ(error_line(text), 6u);
}

TEST(Spec, ErrorsPointAtTheOffendingLine) {
    EXPECT_EQ(error_line(tiny_spec("\"detectors\": [\n\"MF\",\n\"Zf\"],\n\"sweep\": {\"axis\": \"ebn0_db\", \"values\": [0]},\n"
                                   "\"method\": \"semi-analytical\"")),
              7u);
    EXPECT_EQ(error_line(tiny_spec("\"detectors\": [\"MF\"],\n\"sweep\": {\"axis\": \"snr\", \"values\": [0]},\n"
                                   "\"method\": \"semi-analytical\"")),
              6u);
    EXPECT_EQ(error_line(tiny_spec("\"detectors\": [\"MF\"],\n\"sweep\": {\"axis\": \"ebn0_db\", \"values\": [0]},\n"
                                   "\"method\": \"semi-analytical\",\n\"realizations\": 0")),
              8u);
    // Scenario fields are checked with their own line numbers.
    EXPECT_EQ(error_line("{\"name\": \"x\",\n\"scenario\": {\"N\": 32, \"Ls\": 8, \"NT\": 2,\n\"NR\": 1,\n"
                         "\"per_antenna\": [{\"qam\": 4, \"count\": 2}]},\n\"detectors\": [\"MF\"],\n"
                         "\"sweep\": {\"axis\": \"ebn0_db\", \"values\": [0]}, \"method\": \"iber\"}"),
              2u);
}

TEST(Spec, MethodAndAxisMustAgree) {
    EXPECT_THROW(parse(tiny_spec(R"("detectors": ["MF"], "sweep": {"axis": "n_r", "values": [4]}, "method": "semi-analytical")")),
                 ValidationError);
    EXPECT_THROW(parse(tiny_spec(R"("detectors": ["MF"], "sweep": {"axis": "ebn0_db", "values": [4]}, "method": "iber")")),
                 ValidationError);
    EXPECT_THROW(parse(tiny_spec(R"("detectors": [{"first": "MF", "then": "MF", "iterations": 2}],
"sweep": {"axis": "ebn0_db", "values": [4]}, "method": "semi-analytical")")),
                 ValidationError);
    EXPECT_THROW(parse(tiny_spec(R"("detectors": ["MF"], "sweep": {"axis": "n_r", "values": [1]}, "method": "iber")")),
                 ValidationError);
    EXPECT_THROW(parse(tiny_spec(R"("detectors": [], "sweep": {"axis": "n_r", "values": [4]}, "method": "iber")")),
                 ValidationError);
    EXPECT_THROW(parse(tiny_spec(R"("detectors": [{"first": "MF", "then": "ExactMMSE", "iterations": 2}],
"sweep": {"axis": "ebn0_db", "values": [4]}, "method": "monte-carlo")")),
                 ValidationError);
}

TEST(GitHash, MatchesGitBlobHash) {
    // Values from `git hash-object`.
    EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Run, CurveFilesAreReproducible) {
    const auto spec = parse(tiny_spec(R"("detectors": ["MF", {"first": "SimplifiedMMSE", "then": "MF", "iterations": 2}],
"sweep": {"axis": "ebn0_db", "values": [0, 6]},
"method": "both", "bounds": ["simo_awgn_mfb", "simo_mfb"], "realizations": 4,
"monte_carlo": {"min_errors": 10, "min_blocks": 2, "max_blocks": 8, "batch": 2})"));
    const auto root = std::filesystem::temp_directory_path() / "scfde_experiments_test";
    std::filesystem::remove_all(root);
    RunOptions a;
    a.out_dir = root / "a";
    RunOptions b;
    b.out_dir = root / "b";
    b.workers = 3;
    const auto ra = run_experiment(spec, a);
    const auto rb = run_experiment(spec, b);
    // MF sa, MF mc, DF p1 and p2, two bounds.
    ASSERT_EQ(ra.files.size(), 6u);
    EXPECT_EQ(ra.config_hash, rb.config_hash);
    for (const auto& f : ra.files) {
        const auto text = slurp(ra.dir / f.file);
        EXPECT_EQ(text, slurp(rb.dir / f.file)) << f.file;
        EXPECT_NE(text.find("# config_hash: " + ra.config_hash), std::string::npos);
        EXPECT_NE(text.find("ebn0_db,ber_1,ber_2,aggregate_ber,stderr,n_realizations,n_bits\n"), std::string::npos);
    }
    const auto manifest = json::parse(slurp(ra.dir / "manifest.json"));
    EXPECT_EQ(manifest["files"].size(), 6u);
    EXPECT_EQ(manifest["config_hash"], ra.config_hash);

    RunOptions c = a;
    c.out_dir = root / "c";
    c.seed = 99;
    const auto rc = run_experiment(spec, c);
    EXPECT_NE(rc.config_hash, ra.config_hash);
    std::filesystem::remove_all(root);
}

TEST(Run, IberSweepWritesOneCurvePerScheme) {
    const auto spec = parse(tiny_spec(R"("detectors": ["MF", "SimplifiedMMSE"],
"sweep": {"axis": "n_r", "values": [2, 4, 6]}, "method": "iber", "schemes": [4, 64], "realizations": 3)"));
    const auto root = std::filesystem::temp_directory_path() / "scfde_experiments_iber";
    std::filesystem::remove_all(root);
    RunOptions opts;
    opts.out_dir = root;
    const auto r = run_experiment(spec, opts);
    ASSERT_EQ(r.files.size(), 4u);
    const auto text = slurp(r.dir / r.files[0].file);
    EXPECT_NE(text.find("n_r,ber_1,ber_2"), std::string::npos);
    EXPECT_NE(text.find("\n2,"), std::string::npos);
    EXPECT_NE(text.find("\n6,"), std::string::npos);
    std::filesystem::remove_all(root);
}

TEST(BundledSpecs, AllValidate) {
    const auto specs = bundled_specs();
    EXPECT_GE(specs.size(), 6u);
    for (const auto& p : specs) EXPECT_NO_THROW(load_spec(p)) << p;
    EXPECT_EQ(load_spec(resolve_spec("fig6")).scenario.n_t, 24u);
    EXPECT_THROW(resolve_spec("no-such-spec"), ValidationError);
}
