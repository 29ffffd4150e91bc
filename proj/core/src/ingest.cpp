#include "tierbench/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tierbench/error.hpp"
#include "tierbench/io.hpp"
#include "tierbench/random.hpp"

namespace tierbench {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::kSchemaError, msg); }

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) schema(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) schema(std::string("field '") + key + "' must be a string");
  std::string s = v.get<std::string>();
  if (s.empty()) schema(std::string("field '") + key + "' must be non-empty");
  return s;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

bool has(const json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && !it->is_null();
}

Tier model_tier(const json& v, const char* key) {
  if (!v.is_string()) schema(std::string("field '") + key + "' must be a tier name");
  auto t = tier_from_name(v.get<std::string>());
  if (!t) schema(std::string("field '") + key + "': '" + v.get<std::string>() + "' is not a tier");
  return *t;
}

std::array<std::optional<double>, kNumTiers> tier_number_map(const json& v, const char* key) {
  if (!v.is_object()) schema(std::string("field '") + key + "' must map tier names to numbers");
  std::array<std::optional<double>, kNumTiers> out{};
  for (auto it = v.begin(); it != v.end(); ++it) {
    auto t = tier_from_name(it.key());
    if (!t) schema(std::string("field '") + key + "': unknown tier '" + it.key() + "'");
    if (!it.value().is_number()) schema(std::string("field '") + key + "': value for '" + it.key() + "' must be a number");
    out[index(*t)] = it.value().get<double>();
  }
  return out;
}

json tier_number_json(const std::array<std::optional<double>, kNumTiers>& m) {
  json j = json::object();
  for (Tier t : kAllTiers) {
    if (m[index(t)]) j[std::string(name(t))] = *m[index(t)];
  }
  return j;
}

template <class F>
auto at_line(std::string_view source, std::size_t line_no, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaError || e.code() == ErrorCode::kOutOfRangeLikert ||
        e.code() == ErrorCode::kUnknownLabel || e.code() == ErrorCode::kInvalidDistribution) {
      const ErrorCode code = e.code() == ErrorCode::kOutOfRangeLikert ? e.code() : ErrorCode::kSchemaError;
      throw Error(code, std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
    throw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

bool is_header(const json& j) { return j.size() == 1 && j.contains("header"); }

int likert(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) schema(std::string("field '") + key + "' must be an integer 1..5");
  const auto x = v.get<long long>();
  if (x < 1 || x > 5) {
    throw Error(ErrorCode::kOutOfRangeLikert, std::string(key) + " = " + std::to_string(x) + " is outside 1..5");
  }
  return static_cast<int>(x);
}

}  // namespace

// --- BenchmarkSet ----------------------------------------------------------

const Pitch* BenchmarkSet::find(std::string_view pitch_id) const {
  for (const auto& p : pitches) {
    if (p.id == pitch_id) return &p;
  }
  return nullptr;
}

std::map<std::string, Tier, std::less<>> BenchmarkSet::truths() const {
  std::map<std::string, Tier, std::less<>> out;
  for (const auto& p : pitches) out.emplace(p.id, p.truth);
  return out;
}

std::array<std::size_t, kNumTiers> BenchmarkSet::tier_counts() const {
  std::array<std::size_t, kNumTiers> counts{};
  for (const auto& p : pitches) ++counts[index(p.truth)];
  return counts;
}

std::string_view kind_name(PredictionKind k) noexcept {
  switch (k) {
    case PredictionKind::kLogprob: return "logprob";
    case PredictionKind::kSampled: return "sampled";
    case PredictionKind::kLabelOnly: return "label_only";
  }
  return "label_only";
}

std::string_view panel_name(Panel p) noexcept { return p == Panel::kExpert ? "expert" : "junior"; }

// --- Pitch -------------------------------------------------------------------

json to_json(const Pitch& p) {
  json j;
  j["id"] = p.id;
  j["field"] = field_name(p.field);
  j["text_full"] = p.text_full;
  if (p.text_short) j["text_short"] = *p.text_short;
  j["truth"] = name(p.truth);
  if (p.journal) j["journal"] = *p.journal;
  if (p.research_domain) j["research_domain"] = *p.research_domain;
  return j;
}

Pitch pitch_from_json(const json& j) {
  Pitch p;
  p.id = require_string(j, "id");
  p.field = has(j, "field") ? field_from_name(require_string(j, "field")) : Field::kManagement;
  p.text_full = require_string(j, "text_full");
  p.text_short = optional_string(j, "text_short");
  p.truth = model_tier(require(j, "truth"), "truth");
  p.journal = optional_string(j, "journal");
  p.research_domain = optional_string(j, "research_domain");
  return p;
}

namespace {

std::size_t balanced_count(const std::vector<Pitch>& pitches) {
  std::array<std::size_t, kNumTiers> counts{};
  for (const auto& p : pitches) ++counts[index(p.truth)];
  const bool balanced = std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == counts[0]; });
  return balanced ? counts[0] : 0;
}

}  // namespace

BenchmarkSet parse_benchmark(std::string_view text, std::string_view source_name) {
  BenchmarkSet bench;
  std::set<std::string, std::less<>> seen;
  for (const auto& line : io::parse_jsonl(text, source_name)) {
    if (is_header(line.value)) {
      at_line(source_name, line.line_no, [&] {
        if (auto id = optional_string(line.value["header"], "id")) bench.id = *id;
        return 0;
      });
      continue;
    }
    Pitch p = at_line(source_name, line.line_no, [&] { return pitch_from_json(line.value); });
    if (!seen.insert(p.id).second) {
      throw Error(ErrorCode::kDuplicatePitchId, std::string(source_name) + ":" +
                                                    std::to_string(line.line_no) + ": duplicate pitch id '" + p.id + "'");
    }
    bench.pitches.push_back(std::move(p));
  }
  if (bench.pitches.empty()) throw Error(ErrorCode::kEmptyFile, std::string(source_name) + " has no pitches");
  if (bench.id.empty()) bench.id = std::filesystem::path(source_name).stem().string();
  bench.per_tier_count = balanced_count(bench.pitches);
  return bench;
}

BenchmarkSet load_benchmark(const std::filesystem::path& path) {
  return parse_benchmark(io::read_file(path), path.string());
}

std::string serialize_benchmark(const BenchmarkSet& bench) {
  std::vector<json> lines;
  lines.push_back(json{{"header", json{{"id", bench.id}}}});
  for (const auto& p : bench.pitches) lines.push_back(to_json(p));
  return io::to_jsonl(lines);
}

BenchmarkSet assemble_balanced(std::vector<Pitch> pool, std::size_t per_tier, std::uint64_t seed) {
  if (per_tier == 0) throw Error(ErrorCode::kInvalidArgument, "per_tier must be positive");
  std::sort(pool.begin(), pool.end(), [](const Pitch& a, const Pitch& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].id == pool[i - 1].id) {
      throw Error(ErrorCode::kDuplicatePitchId, "duplicate pitch id '" + pool[i].id + "' in pool");
    }
  }
  std::array<std::vector<const Pitch*>, kNumTiers> by_tier;
  for (const auto& p : pool) by_tier[index(p.truth)].push_back(&p);
  for (Tier t : kAllTiers) {
    if (by_tier[index(t)].size() < per_tier) {
      throw Error(ErrorCode::kInsufficientTier,
                  std::string(name(t)) + " has " + std::to_string(by_tier[index(t)].size()) +
                      " pitches, need " + std::to_string(per_tier));
    }
  }
  BenchmarkSet bench;
  bench.id = "balanced-" + std::to_string(per_tier) + "x4-seed" + std::to_string(seed);
  bench.per_tier_count = per_tier;
  Rng rng(seed);
  for (Tier t : kAllTiers) {
    auto& candidates = by_tier[index(t)];
    rng.partial_shuffle(std::span(candidates), per_tier);
    std::vector<const Pitch*> chosen(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(per_tier));
    std::sort(chosen.begin(), chosen.end(), [](const Pitch* a, const Pitch* b) { return a->id < b->id; });
    for (const Pitch* p : chosen) bench.pitches.push_back(*p);
  }
  return bench;
}

// --- PredictionRecord --------------------------------------------------------

json to_json(const PredictionRecord& r) {
  json j;
  j["evaluator_id"] = r.evaluator_id;
  j["pitch_id"] = r.pitch_id;
  j["kind"] = kind_name(r.kind);
  switch (r.kind) {
    case PredictionKind::kLogprob:
      if (r.label_logprobs) {
        j["logprobs"] = tier_number_json(*r.label_logprobs);
      } else if (r.distribution) {
        std::array<std::optional<double>, kNumTiers> m;
        for (Tier t : kAllTiers) m[index(t)] = (*r.distribution)[t];
        j["distribution"] = tier_number_json(m);
      }
      break;
    case PredictionKind::kSampled: {
      json runs = json::array();
      if (r.runs) {
        for (const auto& run : *r.runs) runs.push_back(run.raw_text);
      }
      j["runs"] = runs;
      break;
    }
    case PredictionKind::kLabelOnly:
      if (r.label) j["label"] = name(*r.label);
      break;
  }
  if (r.confidence) j["confidence"] = *r.confidence;
  return j;
}

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord r;
  r.evaluator_id = require_string(j, "evaluator_id");
  r.pitch_id = require_string(j, "pitch_id");
  const std::string kind = require_string(j, "kind");
  const bool has_logprobs = has(j, "logprobs");
  const bool has_dist = has(j, "distribution");
  const bool has_runs = has(j, "runs");
  const bool has_label = has(j, "label");
  const int payloads = has_logprobs + has_dist + has_runs + has_label;
  if (payloads != 1) {
    schema("a prediction needs exactly one of logprobs, distribution, runs, label (found " +
           std::to_string(payloads) + ")");
  }
  if (kind == "logprob") {
    r.kind = PredictionKind::kLogprob;
    if (has_logprobs) {
      r.label_logprobs = tier_number_map(j["logprobs"], "logprobs");
      try {
        r.distribution = classify_logprob(*r.label_logprobs).distribution;
      } catch (const Error& e) {
        schema(std::string("logprobs: ") + e.what());
      }
    } else if (has_dist) {
      auto m = tier_number_map(j["distribution"], "distribution");
      std::array<double, kNumTiers> p{};
      for (Tier t : kAllTiers) p[index(t)] = m[index(t)].value_or(0.0);
      try {
        r.distribution = LabelDistribution::from_probabilities(p);
      } catch (const Error& e) {
        schema(std::string("distribution: ") + e.what());
      }
    } else {
      schema("kind 'logprob' needs logprobs or distribution");
    }
  } else if (kind == "sampled") {
    r.kind = PredictionKind::kSampled;
    if (!has_runs) schema("kind 'sampled' needs runs");
    const json& runs = j["runs"];
    if (!runs.is_array() || runs.empty()) schema("runs must be a non-empty array of strings");
    std::vector<SampledRun> parsed;
    for (const auto& run : runs) {
      if (!run.is_string()) schema("runs must contain strings");
      const std::string text = run.get<std::string>();
      parsed.push_back({text, parse_label_text(text)});
    }
    r.runs = std::move(parsed);
  } else if (kind == "label_only") {
    r.kind = PredictionKind::kLabelOnly;
    if (!has_label) schema("kind 'label_only' needs label");
    r.label = model_tier(j["label"], "label");
  } else {
    schema("unknown kind '" + kind + "'");
  }
  if (has(j, "confidence")) {
    const json& c = j["confidence"];
    if (!c.is_number()) schema("confidence must be a number");
    const double v = c.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) schema("confidence must lie in [0, 1]");
    r.confidence = v;
  }
  return r;
}

PredictionFile parse_predictions(std::string_view text, std::string_view source_name) {
  PredictionFile file;
  for (const auto& line : io::parse_jsonl(text, source_name)) {
    if (is_header(line.value)) {
      file.header = line.value["header"];
      continue;
    }
    file.records.push_back(at_line(source_name, line.line_no, [&] { return prediction_from_json(line.value); }));
  }
  if (file.records.empty()) throw Error(ErrorCode::kEmptyFile, std::string(source_name) + " has no predictions");
  return file;
}

PredictionFile load_predictions(const std::filesystem::path& path) {
  return parse_predictions(io::read_file(path), path.string());
}

void flag_unknown_pitches(PredictionFile& file, const BenchmarkSet& bench) {
  const auto truths = bench.truths();
  file.unknown_pitch_ids.clear();
  std::set<std::string> unknown;
  for (const auto& r : file.records) {
    if (!truths.count(r.pitch_id)) unknown.insert(r.pitch_id);
  }
  file.unknown_pitch_ids.assign(unknown.begin(), unknown.end());
}

std::string serialize_predictions(const PredictionFile& file) {
  std::vector<json> lines;
  if (!file.header.is_null()) lines.push_back(json{{"header", file.header}});
  for (const auto& r : file.records) lines.push_back(to_json(r));
  return io::to_jsonl(lines);
}

// --- RaterRecord -------------------------------------------------------------

json to_json(const RaterRecord& r) {
  json j;
  j["rater_id"] = r.rater_id;
  j["panel"] = panel_name(r.panel);
  j["pitch_id"] = r.pitch_id;
  j["tier"] = survey_label(r.tier);
  j["confidence"] = r.confidence;
  j["familiarity"] = r.familiarity;
  if (r.prior_exposure) j["prior_exposure"] = *r.prior_exposure;
  if (r.seconds_spent) j["seconds_spent"] = *r.seconds_spent;
  return j;
}

RaterRecord rating_from_json(const json& j) {
  RaterRecord r;
  r.rater_id = require_string(j, "rater_id");
  const std::string panel = require_string(j, "panel");
  if (panel == "expert") {
    r.panel = Panel::kExpert;
  } else if (panel == "junior") {
    r.panel = Panel::kJunior;
  } else {
    schema("panel must be expert or junior");
  }
  r.pitch_id = require_string(j, "pitch_id");
  r.tier = normalize_label(require_string(j, "tier"), LabelSource::kHumanSurvey);
  r.confidence = likert(j, "confidence");
  r.familiarity = likert(j, "familiarity");
  if (has(j, "prior_exposure")) {
    if (!j["prior_exposure"].is_boolean()) schema("prior_exposure must be a boolean");
    r.prior_exposure = j["prior_exposure"].get<bool>();
  }
  if (has(j, "seconds_spent")) {
    if (!j["seconds_spent"].is_number()) schema("seconds_spent must be a number");
    const double s = j["seconds_spent"].get<double>();
    if (!(s >= 0.0)) schema("seconds_spent must be non-negative");
    r.seconds_spent = s;
  }
  return r;
}

RatingsFile parse_ratings(std::string_view text, std::string_view source_name, const RatingFilter& filter) {
  RatingsFile file;
  for (const auto& line : io::parse_jsonl(text, source_name)) {
    if (is_header(line.value)) continue;
    file.records.push_back(at_line(source_name, line.line_no, [&] { return rating_from_json(line.value); }));
  }
  if (file.records.empty()) throw Error(ErrorCode::kEmptyFile, std::string(source_name) + " has no ratings");
  if (!filter.enabled) return file;

  struct Time {
    double seconds = 0.0;
    std::size_t timed = 0;
  };
  std::map<std::string, Time> per_rater;
  for (const auto& r : file.records) {
    if (r.panel != Panel::kJunior || !r.seconds_spent) continue;
    auto& t = per_rater[r.rater_id];
    t.seconds += *r.seconds_spent;
    ++t.timed;
  }
  std::set<std::string> excluded;
  for (const auto& [rater, t] : per_rater) {
    if (t.timed > 0 && t.seconds / static_cast<double>(t.timed) < filter.min_mean_seconds) excluded.insert(rater);
  }
  std::erase_if(file.records, [&](const RaterRecord& r) {
    return r.panel == Panel::kJunior && excluded.count(r.rater_id) > 0;
  });
  file.excluded_raters.assign(excluded.begin(), excluded.end());
  return file;
}

RatingsFile load_ratings(const std::filesystem::path& path, const RatingFilter& filter) {
  return parse_ratings(io::read_file(path), path.string(), filter);
}

std::string serialize_ratings(const RatingsFile& file) {
  std::vector<json> lines;
  for (const auto& r : file.records) lines.push_back(to_json(r));
  return io::to_jsonl(lines);
}

// --- CSV mirrors -------------------------------------------------------------

namespace {

std::string num(double v) { return json(v).dump(); }

}  // namespace

std::string benchmark_csv(const BenchmarkSet& bench) {
  std::string out = io::csv_row({"id", "field", "truth", "truth_code", "journal", "research_domain",
                                 "text_full", "text_short"});
  for (const auto& p : bench.pitches) {
    out += io::csv_row({p.id, std::string(field_name(p.field)), std::string(name(p.truth)),
                        std::to_string(code(p.truth)), p.journal.value_or(""),
                        p.research_domain.value_or(""), p.text_full, p.text_short.value_or("")});
  }
  return out;
}

std::string predictions_csv(const PredictionFile& file) {
  std::string out = io::csv_row({"evaluator_id", "pitch_id", "kind", "label", "confidence", "p_exceptional",
                                 "p_strong", "p_fair", "p_limited", "runs"});
  for (const auto& r : file.records) {
    std::vector<std::string> row{r.evaluator_id, r.pitch_id, std::string(kind_name(r.kind))};
    auto pred = resolve_prediction(r);
    row.push_back(pred ? std::string(name(pred->label)) : "");
    row.push_back(r.confidence ? num(*r.confidence) : (pred && pred->distribution ? num(pred->confidence) : ""));
    for (Tier t : kAllTiers) row.push_back(r.distribution ? num((*r.distribution)[t]) : "");
    std::string runs;
    if (r.runs) {
      for (std::size_t i = 0; i < r.runs->size(); ++i) {
        if (i) runs += '|';
        const auto& parsed = (*r.runs)[i].parsed;
        runs += parsed ? std::string(name(*parsed)) : "unresolved";
      }
    }
    row.push_back(runs);
    out += io::csv_row(row);
  }
  return out;
}

std::string ratings_csv(const RatingsFile& file) {
  std::string out = io::csv_row({"rater_id", "panel", "pitch_id", "tier", "tier_code", "confidence",
                                 "familiarity", "prior_exposure", "seconds_spent"});
  for (const auto& r : file.records) {
    out += io::csv_row({r.rater_id, std::string(panel_name(r.panel)), r.pitch_id, std::string(name(r.tier)),
                        std::to_string(code(r.tier)), std::to_string(r.confidence), std::to_string(r.familiarity),
                        r.prior_exposure ? (*r.prior_exposure ? "true" : "false") : "",
                        r.seconds_spent ? num(*r.seconds_spent) : ""});
  }
  return out;
}

// --- helpers -------------------------------------------------------------------

std::map<std::string, std::vector<PredictionRecord>> by_evaluator(const std::vector<PredictionRecord>& records) {
  std::map<std::string, std::vector<PredictionRecord>> out;
  for (const auto& r : records) out[r.evaluator_id].push_back(r);
  return out;
}

std::optional<Prediction> resolve_prediction(const PredictionRecord& r) {
  switch (r.kind) {
    case PredictionKind::kLogprob: {
      if (!r.distribution) return std::nullopt;
      Prediction p = prediction_from_distribution(*r.distribution);
      p.pitch_id = r.pitch_id;
      return p;
    }
    case PredictionKind::kLabelOnly: {
      if (!r.label) return std::nullopt;
      Prediction p;
      p.pitch_id = r.pitch_id;
      p.label = *r.label;
      p.confidence = r.confidence.value_or(1.0);
      return p;
    }
    case PredictionKind::kSampled: {
      if (!r.runs) return std::nullopt;
      std::vector<std::optional<Tier>> parsed;
      for (const auto& run : *r.runs) parsed.push_back(run.parsed);
      // Truth does not affect the majority; any tier works here.
      const RunAggregate agg = aggregate_runs(parsed, Tier::kExceptional);
      if (!agg.majority) return std::nullopt;
      std::size_t votes = 0;
      for (const auto& t : parsed) votes += (t == agg.majority);
      Prediction p;
      p.pitch_id = r.pitch_id;
      p.label = *agg.majority;
      p.confidence = r.confidence.value_or(static_cast<double>(votes) / static_cast<double>(parsed.size()));
      return p;
    }
  }
  return std::nullopt;
}

}  // namespace tierbench
