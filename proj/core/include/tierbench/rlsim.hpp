#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/tiers.hpp"

namespace tierbench::rl {

struct RewardSpec {
  double exact_reward = 1.0;
  double adjacent_reward = 0.3;
  double far_reward = 0.0;
};

// Zero when the final label disagrees with the label implied by the
// reasoning; otherwise graded by ordinal distance 0 / 1 / 2+.
double reward(Tier label_pred, Tier reasoning_pred, Tier truth, const RewardSpec& spec = {});

struct ClipParams {
  double epsilon = 0.2;
  double epsilon_higher = 0.1;
  double sigma_floor = 1e-8;
};
void validate(const ClipParams& clip);

// (R_i - mean) / (sigma + floor) with the population standard deviation.
// Equal rewards give exactly zero advantages.
std::vector<double> normalize_advantages(std::span<const double> rewards, double sigma_floor = 1e-8);

struct Output {
  std::vector<Tier> tokens;
  std::vector<double> policy_logprobs;
  std::vector<double> reference_logprobs;
  Tier reasoning_label = Tier::kExceptional;
  Tier final_label = Tier::kExceptional;
  double reward = 0.0;
};

struct GroupRollout {
  std::string prompt_id;
  int bucket = 0;
  std::optional<Tier> privileged_hint;
  std::vector<Output> outputs;
};

struct LossResult {
  double loss = 0.0;
  std::vector<std::vector<double>> per_token_terms;
  std::size_t total_tokens = 0;
};

// Token-level clipped surrogate over the stored policy log-probabilities.
LossResult grpo_loss(const GroupRollout& group, std::span<const double> advantages, const ClipParams& clip);

// Categorical policy over the four tier tokens. Logits are keyed by
// (bucket, position); missing keys mean all-zero logits. In privileged mode
// the hint tier's logit is raised by hint_strength.
class ToyPolicy {
 public:
  using Key = std::pair<int, int>;
  using Logits = std::array<double, kNumTiers>;

  ToyPolicy() = default;
  ToyPolicy(int max_tokens, double hint_strength) : max_tokens_(max_tokens), hint_strength_(hint_strength) {}

  int max_tokens() const noexcept { return max_tokens_; }
  double hint_strength() const noexcept { return hint_strength_; }

  Logits logits(int bucket, int position) const;
  void set_logits(int bucket, int position, const Logits& l);
  Logits& mutable_logits(int bucket, int position);
  const std::map<Key, Logits>& table() const noexcept { return logits_; }

  std::array<double, kNumTiers> probabilities(int bucket, int position, std::optional<Tier> hint) const;
  double logprob(int bucket, int position, Tier token, std::optional<Tier> hint) const;

 private:
  std::map<Key, Logits> logits_;
  int max_tokens_ = 4;
  double hint_strength_ = 2.0;
};

using Gradient = std::map<ToyPolicy::Key, std::array<double, kNumTiers>>;

// Loss with the policy log-probabilities recomputed from `policy` (the stored
// reference log-probabilities stay fixed), and its analytic gradient.
LossResult grpo_loss_toy(const ToyPolicy& policy, const GroupRollout& group, std::span<const double> advantages,
                         const ClipParams& clip);
Gradient grpo_gradient_toy(const ToyPolicy& policy, const GroupRollout& group, std::span<const double> advantages,
                           const ClipParams& clip);

struct ToyPrompt {
  std::string id;
  int bucket = 0;
  Tier truth = Tier::kExceptional;
};

// Output i draws from Rng::substream(seed, i): a length in 1..max_tokens, then
// one token per position. The first token is the reasoning label and the last
// the final label. Reference log-probabilities snapshot the policy here.
GroupRollout toy_rollout(const ToyPolicy& policy, const ToyPrompt& prompt, std::size_t group_size,
                         std::uint64_t seed, std::optional<Tier> privileged_hint = std::nullopt,
                         const RewardSpec& spec = {});

struct RouterConfig {
  std::size_t k_diagnostic = 8;
  double tau = 0.25;
};

enum class Route { kStandard, kPrivileged };
std::string_view route_name(Route r) noexcept;

// Privileged iff correct / K < tau.
std::vector<Route> route_privileged(const std::vector<std::vector<bool>>& diagnostic_correct,
                                    const RouterConfig& config);

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t steps = 50;
  std::size_t prompts = 16;
  std::size_t buckets = 4;
  std::size_t group_size = 8;
  std::size_t inner_epochs = 1;
  double learning_rate = 5.0;
  bool privileged_sampling = true;
  int max_tokens = 3;
  double hint_strength = 2.0;
  RewardSpec reward;
  ClipParams clip;
  RouterConfig router;
};

// key = value lines; '#' starts a comment. Unknown keys are rejected.
TrainConfig train_config_from_text(std::string_view text);
std::map<std::string, std::string> parse_key_values(std::string_view text);
nlohmann::json to_json(const TrainConfig& c);

struct StepLog {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double fraction_privileged = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;  // final label equals truth, over all sampled outputs
  std::size_t zero_advantage_groups = 0;
};
nlohmann::json to_json(const StepLog& s);

struct TrainResult {
  ToyPolicy policy;
  std::vector<StepLog> log;
};

TrainResult train(const TrainConfig& config);

}  // namespace tierbench::rl
