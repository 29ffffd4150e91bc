#pragma once

// Independent reference implementations used only by tests. They follow the
// textbook definitions directly (pair enumeration, full subset enumeration,
// unshifted softmax) and share no code with the library.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tierbench/classify.hpp"
#include "tierbench/stats.hpp"
#include "tierbench/tiers.hpp"

namespace tierbench::oracle {

// Fleiss kappa by enumerating ordered rater pairs per item. Items with fewer
// than two ratings are skipped.
double fleiss_kappa(const PitchRatings& ratings);

// Cohen kappa with chance agreement from all n*n cross pairs.
double cohen_kappa(const std::vector<Tier>& a, const std::vector<Tier>& b);

enum class Metric { kNominal, kOrdinal, kInterval, kRatio };
// Krippendorff alpha from pairwise disagreements: observed over within-unit
// pairs, expected over all pairs of pairable values.
double krippendorff_alpha(const std::vector<std::vector<int>>& units, Metric metric);

// Softmax of the present entries computed in long double without shifting,
// then the first maximum in tier order.
struct SoftmaxResult {
  std::array<long double, kNumTiers> p{};
  Tier label = Tier::kExceptional;
  bool tie = false;
};
SoftmaxResult softmax_argmax(const LabelLogprobs& logprobs);

// Exact outcome distribution of one matched-N draw: every subset of m raters
// per pitch, independently across pitches. The key is (correct, effective n).
using Outcome = std::pair<std::size_t, std::size_t>;
std::map<Outcome, double> subsample_outcomes(const PanelRatings& ratings,
                                             const std::map<std::string, Tier, std::less<>>& truths,
                                             std::size_t m);

}  // namespace tierbench::oracle
