#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "tierbench/stats.hpp"
#include "tierbench/tiers.hpp"

namespace tierbench {

// Rows are truth, columns are predictions, both in tier code order.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumTiers>, kNumTiers> counts{};
  std::size_t n = 0;

  std::size_t at(Tier truth, Tier pred) const { return counts[index(truth)][index(pred)]; }
  std::size_t trace() const;
  std::array<std::size_t, kNumTiers> predicted_counts() const;
  std::array<std::size_t, kNumTiers> truth_counts() const;
  // Rows with no items stay all-zero.
  std::array<std::array<double, kNumTiers>, kNumTiers> row_normalized() const;
};

ConfusionMatrix confusion(std::span<const Tier> preds, std::span<const Tier> truths);

struct TierScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  CiMethod method = CiMethod::kWilson;
  double level = 0.95;
};

struct MetricsReport {
  std::size_t n = 0;
  double chance = kFourTierChance;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<TierScores, kNumTiers> per_tier{};
  std::array<std::size_t, kNumTiers> predicted_counts{};
  double above_chance_pp = 0.0;
  double headroom = 0.0;
  std::optional<ConfidenceInterval> ci;  // on accuracy
  std::optional<ConfidenceInterval> macro_f1_ci;
};

// Precision, recall and F1 use 0/0 -> 0.
MetricsReport summarize(const ConfusionMatrix& cm, double chance = kFourTierChance);

// Accuracy interval with an analytic method, or a bootstrap over items when
// method is kBootstrap.
ConfidenceInterval accuracy_ci(const ConfusionMatrix& cm, CiMethod method, double level = 0.95,
                               const BootstrapOptions& boot = {});
double macro_f1(std::span<const Tier> preds, std::span<const Tier> truths);
ConfidenceInterval macro_f1_bootstrap_ci(std::span<const Tier> preds, std::span<const Tier> truths,
                                         const BootstrapOptions& boot = {});

struct ErrorProfile {
  std::size_t exact = 0;
  std::size_t off_by_1 = 0;
  std::size_t off_by_2plus = 0;
  std::size_t under = 0;  // predicted a worse tier (higher code) than the truth
  std::size_t over = 0;   // predicted a better tier (lower code) than the truth
};

ErrorProfile error_profile(std::span<const Tier> preds, std::span<const Tier> truths);

// Shannon entropy of the predicted-label distribution over log 4.
double prediction_entropy(const std::array<std::size_t, kNumTiers>& predicted_counts);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const ErrorProfile& e);

// One row per evaluator in the base-model control table layout.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& model, const std::string& key, const MetricsReport& r,
                            const ConfusionMatrix& cm);

}  // namespace tierbench
