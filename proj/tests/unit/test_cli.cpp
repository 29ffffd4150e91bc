#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "tierbench/classify.hpp"
#include "tierbench/cli.hpp"
#include "tierbench/io.hpp"
#include "tierbench/pairwise.hpp"
#include "tierbench/random.hpp"

namespace tierbench {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tierbench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

std::string fixture(const std::string& name) { return fixtures::path(name).string(); }

// Four logprob evaluators on bench_120 with different accuracy levels.
fs::path write_logprob_evaluators(const fs::path& dir) {
  const auto bench = fixtures::bench_120();
  PredictionFile f;
  Rng rng(4);
  const double skill[] = {0.6, 0.45, 0.35, 0.3};
  for (int e = 0; e < 4; ++e) {
    for (const auto& p : bench.pitches) {
      PredictionRecord r;
      r.evaluator_id = "eval-" + std::to_string(e + 1);
      r.pitch_id = p.id;
      r.kind = PredictionKind::kLogprob;
      LabelLogprobs lp;
      for (Tier t : kAllTiers) lp[index(t)] = -1.0 - rng.uniform01();
      if (rng.bernoulli(skill[e])) lp[index(p.truth)] = -0.2;
      r.label_logprobs = lp;
      r.distribution = classify_logprob(lp).distribution;
      f.records.push_back(r);
    }
  }
  const auto path = dir / "four.jsonl";
  io::write_file_atomic(path, serialize_predictions(f));
  return path;
}

TEST(Cli, MetricsOnConfusionFixture) {
  const auto out = fixtures::temp_dir("cli-metrics");
  const auto r = run_cli({"metrics", "--pred", fixture("confusion_fixture_predictions.jsonl"), "--truth",
                          fixture("bench_120.jsonl"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(out / "metrics.json");
  const auto& rep = m["evaluators"]["model-a"]["report"];
  EXPECT_DOUBLE_EQ(rep["accuracy"].get<double>(), 0.325);
  EXPECT_NEAR(rep["macro_f1"].get<double>(), 0.2683, 5e-5);
  EXPECT_EQ(rep["predicted_counts"], json({{"exceptional", 14}, {"strong", 49}, {"fair", 57}, {"limited", 0}}));
  const auto manifest = read_json(out / "manifest.json");
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["inputs"].size(), 2u);
  EXPECT_EQ(manifest["inputs"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(fs::exists(out / "metrics.csv"));
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = fixtures::temp_dir("cli-idem-a");
  const auto b = fixtures::temp_dir("cli-idem-b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run_cli({"pairwise", "build", "--bench", fixture("bench_120.jsonl"), "--seed", "7", "--out", dir.string()})
                  .code,
              0);
  }
  EXPECT_EQ(io::read_file(a / "pairs.jsonl"), io::read_file(b / "pairs.jsonl"));
  const auto manifest = read_json(a / "manifest.json");
  EXPECT_EQ(manifest["notes"]["pairs_by_distance"], json({{"1", 150}, {"2", 100}, {"3", 50}}));
}

TEST(Cli, UsageErrorExitsOne) {
  const auto r = run_cli({"stats", "binomial", "--k", "3", "--n", "10", "--bogus-flag"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bogus"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({}).code, 1);
}

TEST(Cli, MissingFileExitsTwo) {
  const auto out = fixtures::temp_dir("cli-io");
  const auto r = run_cli({"metrics", "--pred", "/nonexistent/p.jsonl", "--bench", fixture("bench_120.jsonl"), "--out",
                          out.string()});
  EXPECT_EQ(r.code, 2) << r.err;
  const auto manifest = read_json(out / "manifest.json");
  EXPECT_EQ(manifest["status"], "error");
  EXPECT_EQ(manifest["errors"][0]["code"], "IoError");
}

TEST(Cli, ValidationErrorExitsOne) {
  const auto dir = fixtures::temp_dir("cli-bad");
  io::write_file_atomic(dir / "bad.jsonl", R"({"id":"a","text_full":"x","truth":"great"})" "\n");
  const auto r = run_cli({"ingest", "--bench", (dir / "bad.jsonl").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(read_json(dir / "out" / "manifest.json")["errors"][0]["code"], "SchemaError");
}

TEST(Cli, IngestAssemblesBalancedSet) {
  const auto out = fixtures::temp_dir("cli-ingest");
  const auto r = run_cli({"ingest", "--pool", fixture("bench_120.jsonl"), "--per-tier", "10", "--ratings",
                          fixture("ratings_small.jsonl"), "--junior-filter", "--format", "csv", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto v = read_json(out / "validation.json");
  EXPECT_EQ(v["assembled"]["n"], 40);
  EXPECT_EQ(v["ratings"]["excluded_raters"], json::array({"j3"}));
  EXPECT_TRUE(fs::exists(out / "benchmark.jsonl"));
  EXPECT_TRUE(fs::exists(out / "ratings.csv"));
}

TEST(Cli, ConsensusFourOfFour) {
  const auto dir = fixtures::temp_dir("cli-cons");
  const auto preds = write_logprob_evaluators(dir);
  const auto r = run_cli({"consensus", "--preds", preds.string(), "--truth", fixture("bench_120.jsonl"), "--policy",
                          "4of4", "--policy", "share:0.5", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto c = read_json(dir / "out" / "consensus.json");
  ASSERT_EQ(c["policies"].size(), 2u);
  EXPECT_EQ(c["policies"][0]["label"], "4of4");
  EXPECT_LE(c["policies"][0]["coverage"].get<double>(), c["policies"][1]["coverage"].get<double>());
  EXPECT_TRUE(fs::exists(dir / "out" / "consensus.csv"));
}

TEST(Cli, EnsembleRanksAllSubsets) {
  const auto dir = fixtures::temp_dir("cli-ens");
  const auto preds = write_logprob_evaluators(dir);
  ASSERT_EQ(run_cli({"ensemble", "--pred", preds.string(), "--bench", fixture("bench_120.jsonl"), "--out",
                     (dir / "out").string()})
                .code,
            0);
  const auto e = read_json(dir / "out" / "ensembles.json");
  EXPECT_EQ(e["ensembles"].size(), 11u);  // C(4,2)+C(4,3)+C(4,4)
  const auto& rows = e["ensembles"];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i - 1]["accuracy"].get<double>(), rows[i]["accuracy"].get<double>());
  }
}

TEST(Cli, StatsCompendiumAndCalibration) {
  const auto dir = fixtures::temp_dir("cli-stats");
  const auto preds = write_logprob_evaluators(dir);
  ASSERT_EQ(run_cli({"stats", "compendium", "--pred", preds.string(), "--bench", fixture("bench_120.jsonl"), "--out",
                     (dir / "s").string()})
                .code,
            0);
  const auto s = read_json(dir / "s" / "compendium.json");
  EXPECT_EQ(s["pairwise"].size(), 6u);
  EXPECT_TRUE(s.contains("cochran_q"));
  ASSERT_EQ(run_cli({"calibrate", "--pred", preds.string(), "--bench", fixture("bench_120.jsonl"), "--out",
                     (dir / "c").string()})
                .code,
            0);
  const auto c = read_json(dir / "c" / "calibration.json");
  EXPECT_TRUE(c["eval-1"].contains("ece"));
  EXPECT_TRUE(fs::exists(dir / "c" / "selective.json"));
}

TEST(Cli, PairwiseScoreFixture) {
  const auto dir = fixtures::temp_dir("cli-pairs");
  ASSERT_EQ(run_cli({"pairwise", "build", "--bench", fixture("bench_120.jsonl"), "--out", dir.string()}).code, 0);
  const auto set = load_pairs(dir / "pairs.jsonl");
  std::vector<json> lines;
  for (const auto& [pid, chosen] : fixtures::choices_with(set, {{1, 118}, {2, 90}, {3, 45}})) {
    lines.push_back({{"pair_id", pid}, {"chosen_pitch_id", chosen}});
  }
  io::write_file_atomic(dir / "choices.jsonl", io::to_jsonl(lines));
  ASSERT_EQ(run_cli({"pairwise", "score", "--pairs", (dir / "pairs.jsonl").string(), "--choices",
                     (dir / "choices.jsonl").string(), "--out", (dir / "score").string()})
                .code,
            0);
  const auto s = read_json(dir / "score" / "pair_score.json");
  EXPECT_EQ(s["overall"]["percent"], "84.33");
  EXPECT_EQ(s["per_distance"]["1"]["percent"], "78.67");
}

TEST(Cli, RlsimWritesLog) {
  const auto dir = fixtures::temp_dir("cli-rl");
  io::write_file_atomic(dir / "run.kv", "steps = 3\nprompts = 4\ngroup_size = 4\n");
  ASSERT_EQ(run_cli({"rlsim", "--kv", (dir / "run.kv").string(), "--out", (dir / "out").string()}).code, 0);
  const auto log = io::read_jsonl(dir / "out" / "training_log.jsonl");
  EXPECT_EQ(log.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "out" / "final_policy.json"));
}

TEST(Cli, CollectOfflineWithoutCacheFails) {
  const auto dir = fixtures::temp_dir("cli-collect");
  const auto r = run_cli({"collect", "--bench", fixture("bench_120.jsonl"), "--base-url", "http://127.0.0.1:9",
                          "--model", "m", "--offline", "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(fs::exists(dir / "failures.json"));
}

TEST(Cli, ReportBundlesSections) {
  const auto dir = fixtures::temp_dir("cli-report");
  const auto preds = write_logprob_evaluators(dir);
  const auto r = run_cli({"report", "--pred", preds.string(), "--bench", fixture("bench_120.jsonl"), "--ratings",
                          fixture("ratings_small.jsonl"), "--subsample-draws", "200", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics/metrics.json", "calibration/calibration.json", "agreement/agreement.json",
                        "stats/compendium.json", "consensus/consensus.json", "ensembles/ensembles.json",
                        "pairwise/pairs.jsonl", "human/agreement.json", "human/subsample.json", "report_index.json"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
}

}  // namespace
}  // namespace tierbench
