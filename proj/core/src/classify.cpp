#include "tierbench/classify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "tierbench/error.hpp"

namespace tierbench {

LabelDistribution LabelDistribution::from_probabilities(const std::array<double, kNumTiers>& p) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
      throw Error(ErrorCode::kInvalidDistribution, "probability outside [0, 1]");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::kInvalidDistribution, "probabilities sum to " + std::to_string(sum));
  }
  return LabelDistribution(p);
}

LabelDistribution LabelDistribution::one_hot(Tier t) {
  std::array<double, kNumTiers> p{};
  p[index(t)] = 1.0;
  return LabelDistribution(p);
}

LabelDistribution LabelDistribution::uniform() {
  std::array<double, kNumTiers> p;
  p.fill(1.0 / kNumTiers);
  return LabelDistribution(p);
}

double LabelDistribution::max_probability() const noexcept { return *std::max_element(p_.begin(), p_.end()); }

Tier LabelDistribution::argmax(bool* tie_broken) const noexcept {
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t i = 1; i < kNumTiers; ++i) {
    if (p_[i] > p_[best]) {
      best = i;
      tie = false;
    } else if (p_[i] == p_[best]) {
      tie = true;
    }
  }
  if (tie_broken) *tie_broken = tie;
  return tier_at(best);
}

Prediction classify_logprob(const LabelLogprobs& logprobs) {
  double top = -std::numeric_limits<double>::infinity();
  std::size_t present = 0;
  for (const auto& lp : logprobs) {
    if (!lp) continue;
    if (std::isnan(*lp) || *lp == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::kInvalidLogprob, "log-probability must be finite or -inf");
    }
    ++present;
    top = std::max(top, *lp);
  }
  if (present == 0) throw Error(ErrorCode::kEmptyLogprobs, "no tier label log-probability present");
  if (!std::isfinite(top)) throw Error(ErrorCode::kInvalidLogprob, "every log-probability is -inf");

  std::array<double, kNumTiers> w{};
  double z = 0.0;
  for (std::size_t i = 0; i < kNumTiers; ++i) {
    if (logprobs[i]) w[i] = std::exp(*logprobs[i] - top);
    z += w[i];
  }
  for (double& x : w) x /= z;

  // Ties are judged on the raw log-probabilities so rounding in the softmax
  // cannot create or hide them.
  std::size_t best = kNumTiers;
  bool tie = false;
  for (std::size_t i = 0; i < kNumTiers; ++i) {
    if (!logprobs[i]) continue;
    if (best == kNumTiers || *logprobs[i] > *logprobs[best]) {
      best = i;
      tie = false;
    } else if (*logprobs[i] == *logprobs[best]) {
      tie = true;
    }
  }

  Prediction out;
  out.label = tier_at(best);
  out.tie_broken = tie;
  out.distribution = LabelDistribution::from_probabilities(w);
  out.confidence = w[best];
  return out;
}

Prediction prediction_from_distribution(const LabelDistribution& dist) {
  Prediction out;
  out.label = dist.argmax(&out.tie_broken);
  out.distribution = dist;
  out.confidence = dist.max_probability();
  return out;
}

std::optional<Tier> parse_label_text(std::string_view raw) {
  std::string cleaned;
  for (unsigned char c : raw) {
    if (std::isspace(c) || std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(c)));
  }
  for (Tier t : kAllTiers) {
    if (cleaned == name(t)) return t;
  }
  return std::nullopt;
}

RunAggregate aggregate_runs(std::span<const std::optional<Tier>> parsed_runs, Tier truth) {
  RunAggregate agg;
  agg.truth = truth;
  agg.n_runs = parsed_runs.size();
  std::array<std::size_t, kNumTiers> votes{};
  for (const auto& run : parsed_runs) {
    if (!run) continue;
    ++votes[index(*run)];
    if (*run == truth) ++agg.n_correct;
  }
  const std::size_t top = *std::max_element(votes.begin(), votes.end());
  const auto holders = std::count(votes.begin(), votes.end(), top);
  if (top == 0 || holders > 1) {
    agg.tied = true;
  } else {
    agg.majority = tier_at(static_cast<std::size_t>(std::find(votes.begin(), votes.end(), top) - votes.begin()));
  }
  return agg;
}

RunSummary summarize_runs(std::span<const RunAggregate> aggregates) {
  RunSummary s;
  s.n_pitches = aggregates.size();
  if (aggregates.empty()) return s;
  double fraction_sum = 0.0;
  std::size_t majority_correct = 0;
  for (const auto& a : aggregates) {
    fraction_sum += a.fraction_correct();
    if (a.tied) {
      ++s.ties;
    } else {
      ++s.effective_n;
      majority_correct += (a.majority == a.truth);
    }
  }
  s.pitch_mean_accuracy = fraction_sum / static_cast<double>(aggregates.size());
  s.majority_accuracy =
      s.effective_n == 0 ? 0.0 : static_cast<double>(majority_correct) / static_cast<double>(s.effective_n);
  return s;
}

}  // namespace tierbench
