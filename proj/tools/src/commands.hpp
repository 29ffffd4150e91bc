#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "context.hpp"

namespace tierbench::cli {

struct Common {
  std::string out = "tierbench-out";
  std::uint64_t seed = 7;
  std::string format = "json";
};

using Action = std::function<void(RunContext&)>;

struct Command {
  CLI::App* app = nullptr;
  std::string name;  // "pairwise build" for nested commands
  std::shared_ptr<Common> common;
  Action action;
};

class Registry {
 public:
  // Adds --out, --seed and --format to `sub` and records its action.
  std::shared_ptr<Common> add(CLI::App* sub, std::string name, Action action);
  // Binds the action later, once options referencing the Common exist.
  const std::vector<Command>& commands() const noexcept { return commands_; }
  Command& back() { return commands_.back(); }

 private:
  std::vector<Command> commands_;
};

void register_data_commands(CLI::App& app, Registry& reg);      // ingest, collect, classify
void register_analysis_commands(CLI::App& app, Registry& reg);  // metrics, calibrate, agreement, stats
void register_misc_commands(CLI::App& app, Registry& reg);      // consensus, ensemble, pairwise, rlsim, report

// Shared by report and the individual commands.
struct MetricsOptions {
  std::string ci = "wilson";
  double level = 0.95;
  std::size_t draws = 10000;
  bool f1_ci = false;
};
nlohmann::json run_metrics(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                           const MetricsOptions& opt, const std::string& prefix);
nlohmann::json run_calibration_preds(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                                     std::size_t bins, const std::string& prefix);
nlohmann::json run_agreement_preds(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                                   const std::string& prefix);
nlohmann::json run_compendium(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                              const std::string& mode, const std::string& prefix);
nlohmann::json run_consensus_preds(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                                   const std::vector<std::string>& policies, const std::string& prefix);
nlohmann::json run_ensembles(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                             std::size_t min_size, std::size_t max_size, const std::string& prefix);


}  // namespace tierbench::cli
