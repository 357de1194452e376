#include <gtest/gtest.h>

#include "calibration_rows.hpp"
#include "cli_support.hpp"
#include "test_support.hpp"

using namespace atomscan;
using testutil::fixture;
using testutil::run_cli;
using testutil::scratch_dir;

TEST(Cli, DetectOnJoinFixture) {
    auto dir = scratch_dir("detect_join");
    auto r = run_cli({"detect", "--trace", fixture("join_problem/trace.jsonl"), "--registry",
                      fixture("join_problem/registry.json"), "--out", dir.string(), "--format", "csv"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("pools 1, records 11, matches 2, violations 5"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("  I: 1\n"), std::string::npos);
    EXPECT_NE(r.out.find("  II: 1\n"), std::string::npos);
    EXPECT_NE(r.out.find("  IV: 1\n"), std::string::npos);
    auto files = testutil::dir_contents(dir);
    EXPECT_TRUE(files.count("report.json"));
    ASSERT_TRUE(files.count("summary.csv"));
    EXPECT_EQ(files["summary.csv"].rfind("kind,anomaly,count", 0), 0u);
    Json rep = Json::parse(files["report.json"]);
    EXPECT_EQ(rep["pools"].size(), 1u);
}

TEST(Cli, DetectOracleCompareOnJoinFixture) {
    auto dir = scratch_dir("detect_oracle");
    auto r = run_cli({"detect", "--trace", fixture("join_problem/trace.jsonl"), "--registry",
                      fixture("join_problem/registry.json"), "--out", dir.string(), "--oracle-compare"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("violation_delta 0\n"), std::string::npos) << r.out;
}

TEST(Cli, CrosschainFixtureWithQuorum) {
    auto dir = scratch_dir("crosschain");
    auto r = run_cli({"crosschain", "--trace", fixture("crosschain/source.jsonl"), "--trace",
                      fixture("crosschain/destination.jsonl"), "--quorum", "3", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "matched 1, underwater 1, orphans 1");
    EXPECT_TRUE(testutil::dir_contents(dir).count("delay_histogram.csv"));
}

TEST(Cli, SimulateThenDetectAndIndicators) {
    auto sim = scratch_dir("sim_strategy");
    auto r = run_cli({"simulate", "--preset", "strategy", "--seed", "2", "--out", sim.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(r.out.rfind("records ", 0), 0u);
    auto files = testutil::dir_contents(sim);
    for (const char* f : {"trace.jsonl", "labels.jsonl", "registry.json", "scenario.json"}) EXPECT_TRUE(files.count(f)) << f;

    auto out = scratch_dir("ind_strategy");
    auto ind = run_cli({"indicators", "--trace", (sim / "trace.jsonl").string(), "--registry",
                        (sim / "registry.json").string(), "--out", out.string()});
    ASSERT_EQ(ind.code, cli::kOk) << ind.err;
    EXPECT_NE(ind.out.find("Attacker_A1"), std::string::npos) << ind.out;
    EXPECT_TRUE(testutil::dir_contents(out).count("indicators.json"));

    // The scenario file written by simulate reproduces the same trace.
    auto again = scratch_dir("sim_strategy_again");
    auto r2 = run_cli({"simulate", "--scenario", (sim / "scenario.json").string(), "--out", again.string()});
    ASSERT_EQ(r2.code, cli::kOk) << r2.err;
    EXPECT_EQ(testutil::dir_contents(again)["trace.jsonl"], files["trace.jsonl"]);
}

TEST(Cli, CalibrateFromJson) {
    auto dir = scratch_dir("calibrate");
    Json rows = Json::array();
    for (const auto& v : testutil::training_profiles()) {
        Json j = to_json(v);
        j["attacker"] = true;
        rows.push_back(j);
    }
    std::ofstream(dir / "rows.json") << rows.dump();
    auto r = run_cli({"calibrate", "--input", (dir / "rows.json").string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    Json p = Json::parse(testutil::read_file(dir / "out" / "params.json"));
    EXPECT_EQ(p["x1"], 2);
    EXPECT_EQ(p["x2"], 617);
    EXPECT_EQ(p["x3"], "482/25");
    EXPECT_EQ(DetectionParams::from_json(p).x3, Rational(1928, 100));

    std::ofstream(dir / "none.json") << "[]";
    EXPECT_EQ(run_cli({"calibrate", "--input", (dir / "none.json").string(), "--out", dir.string()}).code,
              cli::kInputError);
}

TEST(Cli, ExitCodesOnBadInput) {
    auto dir = scratch_dir("bad");
    EXPECT_EQ(run_cli({}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"nosuch"}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"detect", "--registry", fixture("join_problem/registry.json")}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"detect", "--trace", "/nonexistent.jsonl", "--registry",
                       fixture("join_problem/registry.json"), "--out", dir.string()})
                  .code,
              cli::kInputError);
    std::ofstream(dir / "broken.jsonl") << "{not json\n";
    auto r = run_cli({"detect", "--trace", (dir / "broken.jsonl").string(), "--registry",
                      fixture("join_problem/registry.json"), "--out", dir.string()});
    EXPECT_EQ(r.code, cli::kInputError);
    EXPECT_NE(r.err.find("line 1"), std::string::npos);
    EXPECT_EQ(run_cli({"crosschain", "--trace", fixture("crosschain/source.jsonl"), "--quorum", "0"}).code,
              cli::kInputError);
    EXPECT_EQ(run_cli({"simulate", "--preset", "other"}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"detect", "--help"}).code, cli::kOk);
}

TEST(Cli, ConfigFileSuppliesFlags) {
    auto dir = scratch_dir("config");
    std::ofstream(dir / "run.ini") << "[detect]\ntolerance-pct=0\n";
    auto strict = run_cli({"--config", (dir / "run.ini").string(), "detect", "--trace",
                           fixture("join_problem/trace.jsonl"), "--registry", fixture("join_problem/registry.json"),
                           "--out", (dir / "o").string()});
    ASSERT_EQ(strict.code, cli::kOk) << strict.err;
    Json rep = Json::parse(testutil::read_file(dir / "o" / "report.json"));
    EXPECT_EQ(rep["params"]["tolerance_pct"], "0");
}

TEST(Cli, DetectIsDeterministic) {
    auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
    for (const auto& d : {a, b}) {
        auto r = run_cli({"detect", "--trace", fixture("interleave/trace.jsonl"), "--registry",
                          fixture("interleave/registry.json"), "--out", d.string(), "--jobs", "2"});
        ASSERT_EQ(r.code, cli::kOk) << r.err;
    }
    EXPECT_EQ(testutil::dir_contents(a), testutil::dir_contents(b));
}
