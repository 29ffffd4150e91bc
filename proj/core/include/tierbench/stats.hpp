#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/tiers.hpp"

namespace tierbench {

// --- results ---------------------------------------------------------------

enum class Sidedness { kTwoSided, kGreater, kLess };
std::string_view sidedness_name(Sidedness s) noexcept;

struct TestResult {
  std::string name;
  std::optional<double> statistic;
  double p = 1.0;
  Sidedness sided = Sidedness::kTwoSided;
  std::size_t n = 0;
  std::map<std::string, double> details;
};
nlohmann::json to_json(const TestResult& r);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool operator==(const Interval&) const = default;
};

enum class CiMethod { kWilson, kNormal, kClopperPearson, kBootstrap };
std::string_view ci_method_name(CiMethod m) noexcept;
CiMethod ci_method_from_name(std::string_view name);

// --- agreement ---------------------------------------------------------------

using PitchRatings = std::map<std::string, std::vector<Tier>>;

struct FleissResult {
  double kappa = 0.0;
  std::size_t items_used = 0;
  std::size_t items_excluded = 0;  // fewer than two ratings
};

// Per-item n_i generalization: each item's observed agreement is the share of
// agreeing ordered rater pairs, and chance agreement uses the pooled label
// proportions weighted by rating counts.
FleissResult fleiss_kappa(const PitchRatings& ratings);

// Throws DegenerateMarginals when chance agreement is 1.
double cohen_kappa(std::span<const Tier> a, std::span<const Tier> b);
double cohen_kappa_from_marginals(double observed, std::span<const double> marginals_a,
                                  std::span<const double> marginals_b);

enum class AlphaMetric { kNominal, kOrdinal, kInterval, kRatio };

// Krippendorff's alpha over integer-coded values. Each unit holds the values
// it received; units with fewer than two values are not pairable and drop out.
double krippendorff_alpha(const std::vector<std::vector<int>>& units, AlphaMetric metric);
double krippendorff_alpha_ordinal(const PitchRatings& ratings);

// rater id -> pitch id -> label
using RaterLabels = std::map<std::string, std::map<std::string, Tier>>;

struct AgreementReport {
  std::optional<double> fleiss_kappa;
  std::size_t fleiss_items_excluded = 0;
  std::optional<double> krippendorff_alpha;
  std::map<std::pair<std::string, std::string>, double> pairwise_cohen;
  std::map<std::pair<std::string, std::string>, double> mean_ordinal_distance;
  std::vector<std::string> notes;  // coefficients left undefined, and why
};
// Pairwise statistics use the pitches both raters labelled.
AgreementReport agreement_report(const RaterLabels& labels);
nlohmann::json to_json(const AgreementReport& r);

// --- tests ---------------------------------------------------------------------

enum class McNemarMode { kExact, kContinuityCorrected };

// b = only A correct, c = only B correct.
TestResult mcnemar_counts(std::size_t b, std::size_t c, McNemarMode mode);
TestResult mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b, McNemarMode mode);

// Two-sided p sums the probabilities of every outcome no more likely than k.
TestResult binomial_test(std::size_t k, std::size_t n, double p0, Sidedness sided);

Interval wilson_ci(std::size_t k, std::size_t n, double level = 0.95);
Interval normal_ci(std::size_t k, std::size_t n, double level = 0.95);
Interval clopper_pearson_ci(std::size_t k, std::size_t n, double level = 0.95);
// Wilson, normal or Clopper-Pearson; bootstrap needs the sample and is rejected here.
Interval proportion_ci(std::size_t k, std::size_t n, CiMethod method, double level = 0.95);

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

double spearman_rho(std::span<const double> x, std::span<const double> y);
// Two-sided permutation p = (1 + #{|rho_perm| >= |rho|}) / (1 + draws).
TestResult spearman_perm(std::span<const double> x, std::span<const double> y, std::size_t draws,
                         std::uint64_t seed);

enum class MwuMethod { kNormal, kExact };
// Greater tests x stochastically larger than y. The normal method uses the
// tie-corrected variance and a continuity correction; with zero variance p is 0.5
// for one-sided tests and 1 for two-sided. The exact method enumerates every
// split of the pooled ranks.
TestResult mann_whitney(std::span<const double> x, std::span<const double> y, Sidedness sided,
                        MwuMethod method = MwuMethod::kNormal);

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);
// rows = items, columns = evaluators
TestResult cochran_q(const std::vector<std::vector<bool>>& correctness);
TestResult t_one_sample(std::span<const double> x, double mu, Sidedness sided = Sidedness::kTwoSided);

std::vector<double> holm_adjust(std::span<const double> p);

// --- resampling ------------------------------------------------------------

struct BootstrapOptions {
  std::size_t draws = 10000;
  std::uint64_t seed = 0;
  double level = 0.95;
  unsigned threads = 1;  // results do not depend on this
};

// Percentile interval of a statistic over seeded index resamples of size n.
// Draw d uses Rng::substream(seed, d), so output is identical for any thread count.
Interval bootstrap_ci_indices(std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
                              const BootstrapOptions& opts = {});
Interval bootstrap_ci(const std::function<double(std::span<const double>)>& statistic,
                      std::span<const double> data, const BootstrapOptions& opts = {});
std::vector<double> bootstrap_replicates(std::size_t n,
                                         const std::function<double(std::span<const std::size_t>)>& statistic,
                                         const BootstrapOptions& opts);

// Type-7 sample quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

using PanelRatings = std::map<std::string, std::vector<std::pair<std::string, Tier>>>;

struct SubsampleReport {
  std::size_t draws = 0;
  double mean_accuracy = 0.0;
  Interval ci;
  double mean_effective_n = 0.0;
  std::size_t empty_draws = 0;  // draws where every pitch tied; left out of the mean
  std::vector<double> per_draw_accuracy;
  std::vector<std::size_t> per_draw_effective_n;
};

// Per draw and pitch, samples min(available, round(target)) raters without
// replacement, takes the strict-plurality label, and scores non-tied pitches.
SubsampleReport matched_n_subsample(const PanelRatings& ratings, const std::map<std::string, Tier, std::less<>>& truths,
                                    double target_raters_per_pitch, std::size_t draws, std::uint64_t seed,
                                    double level = 0.95, unsigned threads = 1);
nlohmann::json to_json(const SubsampleReport& r, bool include_draws = false);

}  // namespace tierbench
