#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tierbench/classify.hpp"
#include "tierbench/error.hpp"
#include "tierbench/random.hpp"

namespace tierbench {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Classify, SoftmaxMatchesDirectComputation) {
  const LabelLogprobs lp = {-0.2, -1.7, -3.0, -0.9};
  const auto p = classify_logprob(lp);
  const auto o = oracle::softmax_argmax(lp);
  for (Tier t : kAllTiers) EXPECT_NEAR((*p.distribution)[t], static_cast<double>(o.p[index(t)]), 1e-15);
  EXPECT_EQ(p.label, Tier::kExceptional);
  EXPECT_DOUBLE_EQ(p.confidence, p.distribution->max_probability());
  EXPECT_FALSE(p.tie_broken);
}

TEST(Classify, MissingLabelsGetZeroMass) {
  const LabelLogprobs lp = {std::nullopt, -2.0, std::nullopt, -1.0};
  const auto p = classify_logprob(lp);
  EXPECT_EQ((*p.distribution)[Tier::kExceptional], 0.0);
  EXPECT_EQ((*p.distribution)[Tier::kFair], 0.0);
  EXPECT_EQ(p.label, Tier::kLimited);
  const LabelLogprobs neg_inf = {-kInf, -2.0, -kInf, -1.0};
  EXPECT_EQ(classify_logprob(neg_inf).distribution, p.distribution);
}

TEST(Classify, ShiftInvariant) {
  const LabelLogprobs a = {-0.3, -1.1, -2.5, -0.7};
  const LabelLogprobs b = {999.7, 998.9, 997.5, 999.3};
  const auto pa = classify_logprob(a), pb = classify_logprob(b);
  for (Tier t : kAllTiers) EXPECT_NEAR((*pa.distribution)[t], (*pb.distribution)[t], 1e-12);
}

TEST(Classify, TiesBreakToLowestCode) {
  const LabelLogprobs lp = {-2.0, -1.0, -1.0, -1.0};
  const auto p = classify_logprob(lp);
  EXPECT_EQ(p.label, Tier::kStrong);
  EXPECT_TRUE(p.tie_broken);
  bool tie = false;
  EXPECT_EQ(LabelDistribution::uniform().argmax(&tie), Tier::kExceptional);
  EXPECT_TRUE(tie);
}

TEST(Classify, InvalidLogprobs) {
  auto code_of = [](const LabelLogprobs& lp) {
    try {
      classify_logprob(lp);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  EXPECT_EQ(code_of({std::nullopt, std::nullopt, std::nullopt, std::nullopt}), ErrorCode::kEmptyLogprobs);
  EXPECT_EQ(code_of({-kInf, -kInf, std::nullopt, std::nullopt}), ErrorCode::kInvalidLogprob);
  EXPECT_EQ(code_of({std::nan(""), -1.0, std::nullopt, std::nullopt}), ErrorCode::kInvalidLogprob);
  EXPECT_EQ(code_of({kInf, -1.0, std::nullopt, std::nullopt}), ErrorCode::kInvalidLogprob);
}

TEST(Classify, DistributionValidation) {
  EXPECT_THROW(LabelDistribution::from_probabilities({0.5, 0.5, 0.1, 0.0}), Error);
  EXPECT_THROW(LabelDistribution::from_probabilities({1.2, -0.2, 0.0, 0.0}), Error);
  EXPECT_NO_THROW(LabelDistribution::from_probabilities({0.25, 0.25, 0.25, 0.25 + 1e-12}));
}

TEST(Classify, RandomMapsAgainstOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    LabelLogprobs lp;
    bool any = false;
    for (auto& v : lp) {
      const double u = rng.uniform01();
      if (u < 0.2) {
        v = std::nullopt;
      } else if (u < 0.25) {
        v = -kInf;
      } else {
        v = -static_cast<double>(rng.uniform_index(8)) * 0.5;
        any = true;
      }
    }
    if (!any) continue;
    const auto p = classify_logprob(lp);
    const auto o = oracle::softmax_argmax(lp);
    EXPECT_EQ(p.label, o.label);
    EXPECT_EQ(p.tie_broken, o.tie);
  }
}

TEST(Classify, ParseLabelText) {
  EXPECT_EQ(parse_label_text("Strong"), Tier::kStrong);
  EXPECT_EQ(parse_label_text("  **FAIR**.\n"), Tier::kFair);
  EXPECT_EQ(parse_label_text("\"limited\""), Tier::kLimited);
  EXPECT_FALSE(parse_label_text("strong or fair"));
  EXPECT_FALSE(parse_label_text("Tier: strong"));
  EXPECT_FALSE(parse_label_text(""));
}

TEST(Classify, RunAggregation) {
  const std::vector<std::optional<Tier>> runs = {Tier::kFair, Tier::kFair, Tier::kStrong, std::nullopt};
  const auto a = aggregate_runs(runs, Tier::kFair);
  EXPECT_EQ(a.n_runs, 4u);
  EXPECT_EQ(a.n_correct, 2u);
  EXPECT_EQ(a.majority, Tier::kFair);
  EXPECT_FALSE(a.tied);
  const std::vector<std::optional<Tier>> tied = {Tier::kFair, Tier::kStrong};
  EXPECT_TRUE(aggregate_runs(tied, Tier::kFair).tied);
  const std::vector<std::optional<Tier>> none = {std::nullopt, std::nullopt};
  EXPECT_TRUE(aggregate_runs(none, Tier::kFair).tied);
}

TEST(Classify, RunSummary) {
  std::vector<RunAggregate> aggs;
  const std::vector<std::optional<Tier>> r1 = {Tier::kFair, Tier::kFair, Tier::kStrong, Tier::kFair};
  const std::vector<std::optional<Tier>> r2 = {Tier::kFair, Tier::kStrong};
  const std::vector<std::optional<Tier>> r3 = {Tier::kLimited, Tier::kLimited};
  aggs.push_back(aggregate_runs(r1, Tier::kFair));
  aggs.push_back(aggregate_runs(r2, Tier::kFair));
  aggs.push_back(aggregate_runs(r3, Tier::kFair));
  const auto s = summarize_runs(aggs);
  EXPECT_EQ(s.n_pitches, 3u);
  EXPECT_NEAR(s.pitch_mean_accuracy, (0.75 + 0.5 + 0.0) / 3.0, 1e-15);
  EXPECT_EQ(s.effective_n, 2u);
  EXPECT_EQ(s.ties, 1u);
  EXPECT_DOUBLE_EQ(s.majority_accuracy, 0.5);
}

}  // namespace
}  // namespace tierbench
