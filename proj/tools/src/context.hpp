#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/classify.hpp"
#include "tierbench/ingest.hpp"

namespace tierbench::cli {

namespace fs = std::filesystem;

// Collects what a run read and wrote; the manifest is built from it.
class RunContext {
 public:
  RunContext(std::string subcommand, fs::path out_dir, std::uint64_t seed, std::string format);

  void add_input(const fs::path& path);
  void write(const std::string& relative, const std::string& content);
  void write_json(const std::string& relative, const nlohmann::json& j);
  void note(const std::string& key, nlohmann::json value);

  const fs::path& out_dir() const noexcept { return out_dir_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool csv() const noexcept { return format_ == "csv"; }

  nlohmann::json manifest(const std::vector<std::string>& argv, int exit_code,
                          const nlohmann::json& errors) const;

 private:
  std::string subcommand_;
  fs::path out_dir_;
  std::uint64_t seed_;
  std::string format_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::json notes_ = nlohmann::json::object();
};

BenchmarkSet read_benchmark(RunContext& ctx, const fs::path& path);
// Predictions from several files, flagged against the benchmark.
PredictionFile read_predictions(RunContext& ctx, const std::vector<fs::path>& paths, const BenchmarkSet& bench);
RatingsFile read_ratings(RunContext& ctx, const fs::path& path, const RatingFilter& filter);

// One evaluator aligned to benchmark order. Missing or unresolved predictions
// stay in place as nullopt and score as incorrect.
struct Aligned {
  std::string evaluator;
  std::vector<std::string> pitch_ids;
  std::vector<Tier> truths;
  std::vector<std::optional<Prediction>> predictions;
  std::vector<const PredictionRecord*> records;  // null when missing
  std::size_t missing = 0;
  std::size_t unresolved = 0;

  std::vector<bool> correct() const;
  bool complete_distributions() const;
};

std::vector<Aligned> align(const PredictionFile& preds, const BenchmarkSet& bench);

std::vector<std::string> split_list(const std::string& s, char sep);

// "all", "expert" or "junior"; nullopt means every panel.
std::optional<Panel> parse_panel(const std::string& s);
std::vector<const RaterRecord*> select_panel(const RatingsFile& file, std::optional<Panel> panel);

}  // namespace tierbench::cli
