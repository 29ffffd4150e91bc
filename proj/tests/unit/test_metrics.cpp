#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "reference_values.hpp"
#include "tierbench/error.hpp"
#include "tierbench/metrics.hpp"

namespace tierbench {
namespace {

struct Labels {
  std::vector<Tier> preds, truths;
};

Labels fixture_labels() {
  const auto bench = fixtures::bench_120();
  const auto preds = fixtures::confusion_fixture();
  Labels l;
  for (const auto& r : preds.records) {
    l.preds.push_back(*r.label);
    l.truths.push_back(bench.find(r.pitch_id)->truth);
  }
  return l;
}

TEST(Metrics, ConfusionFixture) {
  const auto l = fixture_labels();
  const auto cm = confusion(l.preds, l.truths);
  EXPECT_EQ(cm.n, 120u);
  EXPECT_EQ(cm.trace(), 39u);
  EXPECT_EQ(cm.predicted_counts(), (std::array<std::size_t, 4>{14, 49, 57, 0}));
  EXPECT_EQ(cm.truth_counts(), (std::array<std::size_t, 4>{30, 30, 30, 30}));
  const auto r = summarize(cm);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.325);
  const double f1 = (12.0 / 44.0 + 36.0 / 79.0 + 30.0 / 87.0 + 0.0) / 4.0;
  EXPECT_NEAR(r.macro_f1, f1, 1e-15);
  EXPECT_NEAR(r.above_chance_pp, 7.5, 1e-12);
  EXPECT_NEAR(r.headroom, 0.1, 1e-15);
  EXPECT_EQ(r.per_tier[index(Tier::kLimited)].precision, 0.0);
  EXPECT_EQ(r.per_tier[index(Tier::kLimited)].f1, 0.0);
  EXPECT_NEAR(macro_f1(l.preds, l.truths), f1, 1e-15);
}

TEST(Metrics, RowNormalized) {
  const std::vector<Tier> p = {Tier::kFair, Tier::kFair, Tier::kStrong};
  const std::vector<Tier> t = {Tier::kFair, Tier::kStrong, Tier::kStrong};
  const auto rn = confusion(p, t).row_normalized();
  EXPECT_DOUBLE_EQ(rn[index(Tier::kStrong)][index(Tier::kFair)], 0.5);
  EXPECT_DOUBLE_EQ(rn[index(Tier::kFair)][index(Tier::kFair)], 1.0);
  EXPECT_DOUBLE_EQ(rn[index(Tier::kLimited)][index(Tier::kLimited)], 0.0);
}

TEST(Metrics, Errors) {
  const std::vector<Tier> a = {Tier::kFair};
  const std::vector<Tier> b = {Tier::kFair, Tier::kStrong};
  EXPECT_THROW(confusion(a, b), Error);
  EXPECT_THROW(confusion(std::vector<Tier>{}, std::vector<Tier>{}), Error);
  EXPECT_THROW(prediction_entropy({0, 0, 0, 0}), Error);
}

TEST(Metrics, ErrorProfile) {
  const auto l = fixture_labels();
  const auto e = error_profile(l.preds, l.truths);
  EXPECT_EQ(e.exact, 39u);
  EXPECT_EQ(e.off_by_1, 61u);
  EXPECT_EQ(e.off_by_2plus, 20u);
  EXPECT_EQ(e.under, 34u);
  EXPECT_EQ(e.over, 47u);
}

TEST(Metrics, Entropy) {
  EXPECT_DOUBLE_EQ(prediction_entropy({5, 5, 5, 5}), 1.0);
  EXPECT_DOUBLE_EQ(prediction_entropy({0, 9, 0, 0}), 0.0);
  const double p[] = {14.0 / 120, 49.0 / 120, 57.0 / 120};
  double h = 0;
  for (double x : p) h -= x * std::log(x);
  EXPECT_NEAR(prediction_entropy({14, 49, 57, 0}), h / std::log(4.0), 1e-12);
}

TEST(Metrics, AnalyticIntervals) {
  const auto cm = confusion(fixture_labels().preds, fixture_labels().truths);
  const auto w = accuracy_ci(cm, CiMethod::kWilson);
  EXPECT_NEAR(w.low, reference::kWilsonLow, 1e-12);
  EXPECT_NEAR(w.high, reference::kWilsonHigh, 1e-12);
  const auto c = accuracy_ci(cm, CiMethod::kClopperPearson);
  EXPECT_NEAR(c.low, reference::kClopperLow, 1e-10);
  EXPECT_NEAR(c.high, reference::kClopperHigh, 1e-10);
}

TEST(Metrics, BootstrapIntervalsAreSeeded) {
  const auto l = fixture_labels();
  const auto cm = confusion(l.preds, l.truths);
  BootstrapOptions o;
  o.draws = 2000;
  o.seed = 5;
  const auto a = accuracy_ci(cm, CiMethod::kBootstrap, 0.95, o);
  const auto b = accuracy_ci(cm, CiMethod::kBootstrap, 0.95, o);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_LT(a.low, 0.325);
  EXPECT_GT(a.high, 0.325);
  const auto f = macro_f1_bootstrap_ci(l.preds, l.truths, o);
  EXPECT_LT(f.low, 0.2684);
  EXPECT_GT(f.high, 0.2683);
}

TEST(Metrics, CsvLayout) {
  const auto l = fixture_labels();
  const auto cm = confusion(l.preds, l.truths);
  auto r = summarize(cm);
  r.ci = accuracy_ci(cm, CiMethod::kWilson);
  const auto header = metrics_csv_header();
  EXPECT_EQ(header.rfind("Model,Model Key,N,Accuracy (%),Macro F1,", 0), 0u);
  const auto row = metrics_csv_row("Model A", "model-a", r, cm);
  EXPECT_EQ(row.rfind("Model A,model-a,120,32.5,0.268,24.8,41.3,7.5,10.0,", 0), 0u) << row;
  EXPECT_NE(row.find(",14,49,57,0"), std::string::npos) << row;
}

}  // namespace
}  // namespace tierbench
