#include "tierbench/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "tierbench/error.hpp"

namespace tierbench {

namespace {

constexpr double kWeightTolerance = 1e-9;

void check_weights(const std::vector<double>& w, std::size_t members) {
  if (w.size() != members) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(w.size()) + " weights for " +
                                                std::to_string(members) + " members");
  }
  double sum = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) throw Error(ErrorCode::kInvalidWeights, "weights must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kWeightTolerance) {
    throw Error(ErrorCode::kInvalidWeights, "weights sum to " + std::to_string(sum));
  }
}

}  // namespace

void validate(const EnsembleSpec& spec) {
  if (spec.member_ids.size() < 2) throw Error(ErrorCode::kInvalidArgument, "an ensemble needs at least two members");
  if (spec.weights) check_weights(*spec.weights, spec.member_ids.size());
}

Prediction ensemble_average(std::span<const LabelDistribution> distributions,
                            const std::optional<std::vector<double>>& weights) {
  if (distributions.size() < 2) throw Error(ErrorCode::kInvalidArgument, "ensemble_average needs two or more members");
  if (weights) check_weights(*weights, distributions.size());
  const double uniform = 1.0 / static_cast<double>(distributions.size());

  std::array<double, kNumTiers> mean{};
  std::vector<double> terms(distributions.size());
  for (std::size_t t = 0; t < kNumTiers; ++t) {
    for (std::size_t m = 0; m < distributions.size(); ++m) {
      terms[m] = distributions[m].probabilities()[t] * (weights ? (*weights)[m] : uniform);
    }
    // Summing sorted terms makes the result independent of member order.
    std::sort(terms.begin(), terms.end());
    mean[t] = std::accumulate(terms.begin(), terms.end(), 0.0);
  }
  const double z = std::accumulate(mean.begin(), mean.end(), 0.0);
  for (double& x : mean) x /= z;
  return prediction_from_distribution(LabelDistribution::from_probabilities(mean));
}

std::optional<Tier> majority_vote(std::span<const Tier> labels) {
  if (labels.empty()) throw Error(ErrorCode::kEmptyInput, "majority_vote needs at least one label");
  std::array<std::size_t, kNumTiers> votes{};
  for (Tier t : labels) ++votes[index(t)];
  const auto top = std::max_element(votes.begin(), votes.end());
  if (std::count(votes.begin(), votes.end(), *top) > 1) return std::nullopt;
  return tier_at(static_cast<std::size_t>(top - votes.begin()));
}

std::string_view consensus_kind_name(ConsensusKind k) noexcept {
  switch (k) {
    case ConsensusKind::kKOfN: return "k_of_n";
    case ConsensusKind::kVoteShare: return "vote_share";
    case ConsensusKind::kUnanimityMinRaters: return "unanimity_min_raters";
  }
  return "k_of_n";
}

void validate(const ConsensusPolicy& p) {
  auto missing = [&](const char* what) {
    throw Error(ErrorCode::kPolicyParamMissing,
                std::string(consensus_kind_name(p.kind)) + " policy needs " + what);
  };
  switch (p.kind) {
    case ConsensusKind::kKOfN:
      if (!p.k || !p.n) missing("k and n");
      if (*p.k < 1 || *p.n < 1 || *p.k > *p.n) missing("1 <= k <= n");
      break;
    case ConsensusKind::kVoteShare:
      if (!p.share) missing("share");
      if (!(*p.share > 0.0 && *p.share <= 1.0)) missing("share in (0, 1]");
      break;
    case ConsensusKind::kUnanimityMinRaters:
      if (!p.min_raters) missing("min_raters");
      if (*p.min_raters < 1) missing("min_raters >= 1");
      break;
  }
}

ConsensusPolicy consensus_policy_from_json(const nlohmann::json& j) {
  ConsensusPolicy p;
  const std::string kind = j.value("kind", "");
  if (kind == "k_of_n") {
    p.kind = ConsensusKind::kKOfN;
  } else if (kind == "vote_share") {
    p.kind = ConsensusKind::kVoteShare;
  } else if (kind == "unanimity_min_raters") {
    p.kind = ConsensusKind::kUnanimityMinRaters;
  } else {
    throw Error(ErrorCode::kPolicyParamMissing, "unknown consensus kind '" + kind + "'");
  }
  if (j.contains("k") && !j["k"].is_null()) p.k = j["k"].get<int>();
  if (j.contains("n") && !j["n"].is_null()) p.n = j["n"].get<int>();
  if (j.contains("share") && !j["share"].is_null()) p.share = j["share"].get<double>();
  if (j.contains("min_raters") && !j["min_raters"].is_null()) p.min_raters = j["min_raters"].get<int>();
  validate(p);
  return p;
}

nlohmann::json to_json(const ConsensusPolicy& p) {
  nlohmann::json j;
  j["kind"] = consensus_kind_name(p.kind);
  j["k"] = p.k ? nlohmann::json(*p.k) : nlohmann::json(nullptr);
  j["n"] = p.n ? nlohmann::json(*p.n) : nlohmann::json(nullptr);
  j["share"] = p.share ? nlohmann::json(*p.share) : nlohmann::json(nullptr);
  j["min_raters"] = p.min_raters ? nlohmann::json(*p.min_raters) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const ConsensusReport& r) {
  nlohmann::json j;
  j["policy"] = to_json(r.policy);
  j["covered_pitch_ids"] = r.covered_pitch_ids;
  j["coverage"] = r.coverage;
  j["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr);
  nlohmann::json per_tier = nlohmann::json::object();
  for (const auto& [t, acc] : r.per_tier_accuracy) per_tier[std::string(name(t))] = acc;
  j["per_tier_accuracy"] = per_tier;
  j["n_total"] = r.total;
  j["n_covered"] = r.covered_pitch_ids.size();
  return j;
}

ConsensusReport consensus_filter(const PitchLabels& per_pitch_labels, const PitchTruths& truths,
                                 const ConsensusPolicy& policy) {
  validate(policy);
  ConsensusReport report;
  report.policy = policy;
  report.total = per_pitch_labels.size();
  std::array<std::size_t, kNumTiers> tier_covered{};
  std::array<std::size_t, kNumTiers> tier_correct{};

  for (const auto& [pitch_id, labels] : per_pitch_labels) {
    if (labels.empty()) throw Error(ErrorCode::kEmptyInput, "pitch '" + pitch_id + "' has no labels");
    const auto truth = truths.find(pitch_id);
    if (truth == truths.end()) throw Error(ErrorCode::kInvalidArgument, "no truth for pitch '" + pitch_id + "'");

    const auto modal = majority_vote(labels);
    if (!modal) continue;
    const auto count = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), *modal));
    bool covered = false;
    switch (policy.kind) {
      case ConsensusKind::kKOfN:
        covered = count >= static_cast<std::size_t>(*policy.k);
        break;
      case ConsensusKind::kVoteShare:
        // Compared as count >= share * size with a small slack so that exact
        // halves stay inclusive despite binary rounding of share.
        covered = static_cast<double>(count) >= *policy.share * static_cast<double>(labels.size()) - 1e-12;
        break;
      case ConsensusKind::kUnanimityMinRaters:
        covered = count == labels.size() && labels.size() >= static_cast<std::size_t>(*policy.min_raters);
        break;
    }
    if (!covered) continue;
    report.covered_pitch_ids.push_back(pitch_id);
    report.predictions.emplace(pitch_id, *modal);
    ++tier_covered[index(truth->second)];
    if (*modal == truth->second) {
      ++report.correct;
      ++tier_correct[index(truth->second)];
    }
  }

  const std::size_t covered = report.covered_pitch_ids.size();
  report.coverage = report.total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(report.total);
  if (covered > 0) report.accuracy = static_cast<double>(report.correct) / static_cast<double>(covered);
  for (Tier t : kAllTiers) {
    if (tier_covered[index(t)] > 0) {
      report.per_tier_accuracy[t] =
          static_cast<double>(tier_correct[index(t)]) / static_cast<double>(tier_covered[index(t)]);
    }
  }
  return report;
}

std::vector<EnsembleCandidate> rank_ensembles(std::vector<EnsembleCandidate> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const EnsembleCandidate& a, const EnsembleCandidate& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.macro_f1 != b.macro_f1) return a.macro_f1 > b.macro_f1;
    return a.spec.member_ids < b.spec.member_ids;
  });
  return candidates;
}

}  // namespace tierbench
