#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/classify.hpp"
#include "tierbench/tiers.hpp"

namespace tierbench {

struct BenchmarkSet {
  std::string id;
  std::vector<Pitch> pitches;
  std::size_t per_tier_count = 0;  // 0 when the set is not tier-balanced
  double chance = kFourTierChance;

  const Pitch* find(std::string_view pitch_id) const;
  std::map<std::string, Tier, std::less<>> truths() const;
  std::array<std::size_t, kNumTiers> tier_counts() const;
};

enum class PredictionKind { kLogprob, kSampled, kLabelOnly };
std::string_view kind_name(PredictionKind k) noexcept;

struct SampledRun {
  std::string raw_text;
  std::optional<Tier> parsed;
  bool operator==(const SampledRun&) const = default;
};

// One evaluator's output for one pitch. Exactly one payload is populated,
// chosen by kind: a distribution (logprob, optionally with the source
// log-probabilities), raw runs (sampled), or a label (label_only).
struct PredictionRecord {
  std::string evaluator_id;
  std::string pitch_id;
  PredictionKind kind = PredictionKind::kLabelOnly;
  std::optional<LabelLogprobs> label_logprobs;
  std::optional<LabelDistribution> distribution;
  std::optional<std::vector<SampledRun>> runs;
  std::optional<Tier> label;
  std::optional<double> confidence;
};

struct PredictionFile {
  nlohmann::json header;  // null when the file has no header line
  std::vector<PredictionRecord> records;
  // Records whose pitch id is absent from the benchmark they were joined
  // against. They stay in `records`; analyses skip them and report the count.
  std::vector<std::string> unknown_pitch_ids;
};

enum class Panel { kExpert, kJunior };
std::string_view panel_name(Panel p) noexcept;

struct RaterRecord {
  std::string rater_id;
  Panel panel = Panel::kExpert;
  std::string pitch_id;
  Tier tier = Tier::kExceptional;
  int confidence = 1;   // Likert 1..5
  int familiarity = 1;  // Likert 1..5
  std::optional<bool> prior_exposure;
  std::optional<double> seconds_spent;

  bool operator==(const RaterRecord&) const = default;
};

struct RatingFilter {
  bool enabled = false;
  // Junior raters whose mean seconds per pitch falls below this are dropped.
  double min_mean_seconds = 60.0;
};

struct RatingsFile {
  std::vector<RaterRecord> records;
  std::vector<std::string> excluded_raters;
};

// --- loading -------------------------------------------------------------
BenchmarkSet load_benchmark(const std::filesystem::path& path);
BenchmarkSet parse_benchmark(std::string_view text, std::string_view source_name);

PredictionFile load_predictions(const std::filesystem::path& path);
PredictionFile parse_predictions(std::string_view text, std::string_view source_name);
void flag_unknown_pitches(PredictionFile& file, const BenchmarkSet& bench);

RatingsFile load_ratings(const std::filesystem::path& path, const RatingFilter& filter = {});
RatingsFile parse_ratings(std::string_view text, std::string_view source_name,
                          const RatingFilter& filter = {});

// Seeded uniform sample of per_tier pitches from every tier. The pool is
// sorted by id first, so the result does not depend on input order.
BenchmarkSet assemble_balanced(std::vector<Pitch> pool, std::size_t per_tier, std::uint64_t seed);

// --- records <-> JSON ------------------------------------------------------
nlohmann::json to_json(const Pitch& p);
nlohmann::json to_json(const PredictionRecord& r);
nlohmann::json to_json(const RaterRecord& r);
Pitch pitch_from_json(const nlohmann::json& j);
PredictionRecord prediction_from_json(const nlohmann::json& j);
RaterRecord rating_from_json(const nlohmann::json& j);

std::string serialize_benchmark(const BenchmarkSet& bench);
std::string serialize_predictions(const PredictionFile& file);
std::string serialize_ratings(const RatingsFile& file);

// Spreadsheet mirrors of the JSONL files.
std::string benchmark_csv(const BenchmarkSet& bench);
std::string predictions_csv(const PredictionFile& file);
std::string ratings_csv(const RatingsFile& file);

// --- helpers shared by analyses -------------------------------------------
// Records grouped by evaluator id, each group in file order.
std::map<std::string, std::vector<PredictionRecord>> by_evaluator(
    const std::vector<PredictionRecord>& records);

// Single-label view of a record. Sampled records resolve to their strict
// plurality (nullopt when tied or fully unresolved).
std::optional<Prediction> resolve_prediction(const PredictionRecord& r);

}  // namespace tierbench
