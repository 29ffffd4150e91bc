#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tierbench/tiers.hpp"

namespace tierbench {

// Probability vector over the four tiers, indexed by index(Tier).
class LabelDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  // Validates entries in [0,1] and sum within kSumTolerance of 1.
  static LabelDistribution from_probabilities(const std::array<double, kNumTiers>& p);
  static LabelDistribution one_hot(Tier t);
  static LabelDistribution uniform();

  double operator[](Tier t) const noexcept { return p_[index(t)]; }
  const std::array<double, kNumTiers>& probabilities() const noexcept { return p_; }
  double max_probability() const noexcept;

  // Highest-probability tier; exact ties go to the lowest code.
  Tier argmax(bool* tie_broken = nullptr) const noexcept;

  bool operator==(const LabelDistribution&) const = default;

 private:
  explicit LabelDistribution(const std::array<double, kNumTiers>& p) : p_(p) {}
  std::array<double, kNumTiers> p_{};
};

// Log-probabilities for whichever tier labels an endpoint returned; absent
// tiers behave as negative infinity.
using LabelLogprobs = std::array<std::optional<double>, kNumTiers>;

struct Prediction {
  std::string pitch_id;
  Tier label = Tier::kExceptional;
  std::optional<LabelDistribution> distribution;
  double confidence = 0.0;
  bool tie_broken = false;
};

// Softmax over the four labels then fixed-order argmax.
Prediction classify_logprob(const LabelLogprobs& logprobs);
Prediction prediction_from_distribution(const LabelDistribution& dist);

// Strips whitespace, punctuation and markdown, lowercases, and requires the
// remainder to be exactly one tier name. Anything else is unresolved.
std::optional<Tier> parse_label_text(std::string_view raw);

struct RunAggregate {
  std::string pitch_id;
  Tier truth = Tier::kExceptional;
  std::size_t n_runs = 0;
  std::size_t n_correct = 0;
  std::optional<Tier> majority;  // absent iff tied
  bool tied = false;

  double fraction_correct() const {
    return n_runs == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_runs);
  }
};

// Unresolved runs count in n_runs (as incorrect) but never in the vote.
// With no resolved run at all the pitch is reported as tied.
RunAggregate aggregate_runs(std::span<const std::optional<Tier>> parsed_runs, Tier truth);

struct RunSummary {
  std::size_t n_pitches = 0;
  double pitch_mean_accuracy = 0.0;  // mean of per-pitch run fractions
  std::size_t effective_n = 0;       // pitches with a strict plurality
  std::size_t ties = 0;
  double majority_accuracy = 0.0;    // over the effective_n pitches
};

RunSummary summarize_runs(std::span<const RunAggregate> aggregates);

}  // namespace tierbench
