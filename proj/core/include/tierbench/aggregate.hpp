#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/classify.hpp"
#include "tierbench/tiers.hpp"

namespace tierbench {

struct EnsembleSpec {
  std::vector<std::string> member_ids;
  std::optional<std::vector<double>> weights;
};

// Throws InvalidArgument for fewer than two members and InvalidWeights for
// negative weights or weights not summing to 1.
void validate(const EnsembleSpec& spec);

// Mean (or weighted mean) of the member distributions, then fixed-order argmax.
// The unweighted mean is independent of member order.
Prediction ensemble_average(std::span<const LabelDistribution> distributions,
                            const std::optional<std::vector<double>>& weights = std::nullopt);

// Strict plurality. nullopt is a tie; there is no random tie-breaking.
std::optional<Tier> majority_vote(std::span<const Tier> labels);

enum class ConsensusKind { kKOfN, kVoteShare, kUnanimityMinRaters };

struct ConsensusPolicy {
  ConsensusKind kind = ConsensusKind::kKOfN;
  std::optional<int> k;
  std::optional<int> n;
  std::optional<double> share;
  std::optional<int> min_raters;

  static ConsensusPolicy k_of_n(int k, int n) { return {ConsensusKind::kKOfN, k, n, {}, {}}; }
  static ConsensusPolicy vote_share(double s) { return {ConsensusKind::kVoteShare, {}, {}, s, {}}; }
  static ConsensusPolicy unanimity(int min_raters) {
    return {ConsensusKind::kUnanimityMinRaters, {}, {}, {}, min_raters};
  }
};

std::string_view consensus_kind_name(ConsensusKind k) noexcept;
// Throws PolicyParamMissing when a parameter needed by the kind is absent or invalid.
void validate(const ConsensusPolicy& policy);
ConsensusPolicy consensus_policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConsensusPolicy& p);

struct ConsensusReport {
  ConsensusPolicy policy;
  std::size_t total = 0;
  std::vector<std::string> covered_pitch_ids;
  std::map<std::string, Tier> predictions;  // modal label of each covered pitch
  std::size_t correct = 0;
  double coverage = 0.0;
  std::optional<double> accuracy;  // absent when nothing is covered
  std::map<Tier, double> per_tier_accuracy;  // by truth tier, covered tiers only
};

nlohmann::json to_json(const ConsensusReport& r);

using PitchLabels = std::map<std::string, std::vector<Tier>>;
using PitchTruths = std::map<std::string, Tier, std::less<>>;

// A pitch is covered when its modal label is unique and meets the policy
// threshold; the modal label is the consensus prediction.
ConsensusReport consensus_filter(const PitchLabels& per_pitch_labels, const PitchTruths& truths,
                                 const ConsensusPolicy& policy);

struct EnsembleCandidate {
  EnsembleSpec spec;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// Accuracy descending, then macro-F1 descending, then member ids ascending.
std::vector<EnsembleCandidate> rank_ensembles(std::vector<EnsembleCandidate> candidates);

}  // namespace tierbench
