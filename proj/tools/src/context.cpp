#include "context.hpp"

#include "tierbench/error.hpp"
#include "tierbench/io.hpp"

namespace tierbench::cli {

RunContext::RunContext(std::string subcommand, fs::path out_dir, std::uint64_t seed, std::string format)
    : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)), seed_(seed), format_(std::move(format)) {}

void RunContext::add_input(const fs::path& path) {
  inputs_.emplace_back(path.string(), io::file_sha256(path));
}

void RunContext::write(const std::string& relative, const std::string& content) {
  io::write_file_atomic(out_dir_ / relative, content);
  outputs_.push_back(relative);
}

void RunContext::write_json(const std::string& relative, const nlohmann::json& j) {
  write(relative, j.dump(2) + "\n");
}

void RunContext::note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

nlohmann::json RunContext::manifest(const std::vector<std::string>& argv, int exit_code,
                                    const nlohmann::json& errors) const {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"sha256", digest}});
  return {{"tool", "tierbench"},
          {"version", TIERBENCH_VERSION},
          {"subcommand", subcommand_},
          {"argv", argv},
          {"seed", seed_},
          {"format", format_},
          {"inputs", inputs},
          {"outputs", outputs_},
          {"notes", notes_},
          {"status", exit_code == 0 ? "ok" : "error"},
          {"exit_code", exit_code},
          {"errors", errors}};
}

BenchmarkSet read_benchmark(RunContext& ctx, const fs::path& path) {
  BenchmarkSet bench = load_benchmark(path);
  ctx.add_input(path);
  return bench;
}

PredictionFile read_predictions(RunContext& ctx, const std::vector<fs::path>& paths, const BenchmarkSet& bench) {
  if (paths.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one prediction file is required");
  PredictionFile all;
  for (const auto& p : paths) {
    PredictionFile f = load_predictions(p);
    ctx.add_input(p);
    for (auto& r : f.records) all.records.push_back(std::move(r));
  }
  flag_unknown_pitches(all, bench);
  if (!all.unknown_pitch_ids.empty()) ctx.note("unknown_pitch_ids", all.unknown_pitch_ids);
  return all;
}

RatingsFile read_ratings(RunContext& ctx, const fs::path& path, const RatingFilter& filter) {
  RatingsFile r = load_ratings(path, filter);
  ctx.add_input(path);
  if (filter.enabled) ctx.note("excluded_raters", r.excluded_raters);
  return r;
}

std::vector<bool> Aligned::correct() const {
  std::vector<bool> out(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i) out[i] = predictions[i] && predictions[i]->label == truths[i];
  return out;
}

bool Aligned::complete_distributions() const {
  for (const auto& p : predictions) {
    if (!p || !p->distribution) return false;
  }
  return true;
}

std::vector<Aligned> align(const PredictionFile& preds, const BenchmarkSet& bench) {
  std::vector<Aligned> out;
  for (const auto& [evaluator, records] : by_evaluator(preds.records)) {
    std::map<std::string, const PredictionRecord*, std::less<>> by_pitch;
    for (const auto& r : records) {
      if (!by_pitch.emplace(r.pitch_id, &r).second) {
        throw Error(ErrorCode::kSchemaError,
                    "evaluator '" + evaluator + "' has two records for pitch '" + r.pitch_id + "'");
      }
    }
    Aligned a;
    a.evaluator = evaluator;
    for (const auto& p : bench.pitches) {
      a.pitch_ids.push_back(p.id);
      a.truths.push_back(p.truth);
      const auto it = by_pitch.find(p.id);
      if (it == by_pitch.end()) {
        a.records.push_back(nullptr);
        a.predictions.push_back(std::nullopt);
        ++a.missing;
        continue;
      }
      a.records.push_back(it->second);
      a.predictions.push_back(resolve_prediction(*it->second));
      if (!a.predictions.back()) ++a.unresolved;
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::optional<Panel> parse_panel(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "expert") return Panel::kExpert;
  if (s == "junior") return Panel::kJunior;
  throw Error(ErrorCode::kInvalidArgument, "unknown panel '" + s + "' (expected all, expert or junior)");
}

std::vector<const RaterRecord*> select_panel(const RatingsFile& file, std::optional<Panel> panel) {
  std::vector<const RaterRecord*> out;
  for (const auto& r : file.records) {
    if (!panel || r.panel == *panel) out.push_back(&r);
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyInput, "no ratings for the selected panel");
  return out;
}

}  // namespace tierbench::cli
