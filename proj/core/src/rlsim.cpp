#include "tierbench/rlsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tierbench/error.hpp"
#include "tierbench/random.hpp"

namespace tierbench::rl {

double reward(Tier label_pred, Tier reasoning_pred, Tier truth, const RewardSpec& spec) {
  if (label_pred != reasoning_pred) return 0.0;
  switch (ordinal_distance(label_pred, truth)) {
    case 0: return spec.exact_reward;
    case 1: return spec.adjacent_reward;
    default: return spec.far_reward;
  }
}

void validate(const ClipParams& clip) {
  if (!(clip.epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (!(clip.epsilon_higher >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon_higher must be nonnegative");
  if (!(clip.sigma_floor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma_floor must be positive");
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double sigma_floor) {
  if (rewards.size() < 2) throw Error(ErrorCode::kGroupTooSmall, "advantage normalization needs G >= 2");
  if (!(sigma_floor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma_floor must be positive");
  const auto g = static_cast<double>(rewards.size());
  // Deviations are taken from the first reward before averaging, so a group of
  // equal rewards yields a mean equal to that reward bit for bit.
  const double r0 = rewards[0];
  double shift = 0.0;
  for (double r : rewards) shift += r - r0;
  const double mean = r0 + shift / g;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sigma = std::sqrt(ss / g);
  std::vector<double> adv(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sigma + sigma_floor);
  return adv;
}

namespace {

struct TokenTerm {
  double term;
  double dterm_dlogprob;
};

TokenTerm clipped_term(double logprob, double ref_logprob, double advantage, const ClipParams& clip) {
  const double diff = logprob - ref_logprob;
  const double ratio = std::exp(diff);
  if (!std::isfinite(diff) || !std::isfinite(ratio)) {
    throw Error(ErrorCode::kNonFiniteRatio, "policy/reference ratio is not finite");
  }
  const double clipped = std::clamp(ratio, 1.0 - clip.epsilon, 1.0 + clip.epsilon + clip.epsilon_higher);
  const double unclipped_term = ratio * advantage;
  const double clipped_term = clipped * advantage;
  if (unclipped_term <= clipped_term) return {unclipped_term, ratio * advantage};
  return {clipped_term, 0.0};
}

void check_group(const GroupRollout& group, std::span<const double> advantages) {
  if (advantages.size() != group.outputs.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one advantage per output is required");
  }
  for (const auto& o : group.outputs) {
    if (o.tokens.empty() || o.policy_logprobs.size() != o.tokens.size() ||
        o.reference_logprobs.size() != o.tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument, "every output needs tokens with matching log-probabilities");
    }
  }
}

template <class LogprobFn>
LossResult loss_impl(const GroupRollout& group, std::span<const double> advantages, const ClipParams& clip,
                     LogprobFn&& logprob) {
  validate(clip);
  check_group(group, advantages);
  LossResult out;
  std::vector<double> terms;
  for (std::size_t i = 0; i < group.outputs.size(); ++i) {
    const auto& o = group.outputs[i];
    std::vector<double> row;
    for (std::size_t t = 0; t < o.tokens.size(); ++t) {
      const double tt = clipped_term(logprob(i, t), o.reference_logprobs[t], advantages[i], clip).term;
      row.push_back(tt);
      terms.push_back(tt);
    }
    out.total_tokens += o.tokens.size();
    out.per_token_terms.push_back(std::move(row));
  }
  std::sort(terms.begin(), terms.end());
  out.loss = -std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(out.total_tokens);
  return out;
}

std::array<double, kNumTiers> softmax(const std::array<double, kNumTiers>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  std::array<double, kNumTiers> p{};
  double s = 0.0;
  for (std::size_t k = 0; k < kNumTiers; ++k) {
    p[k] = std::exp(z[k] - top);
    s += p[k];
  }
  for (double& x : p) x /= s;
  return p;
}

}  // namespace

LossResult grpo_loss(const GroupRollout& group, std::span<const double> advantages, const ClipParams& clip) {
  return loss_impl(group, advantages, clip,
                   [&](std::size_t i, std::size_t t) { return group.outputs[i].policy_logprobs[t]; });
}

// --- ToyPolicy -------------------------------------------------------------------

ToyPolicy::Logits ToyPolicy::logits(int bucket, int position) const {
  const auto it = logits_.find({bucket, position});
  return it == logits_.end() ? Logits{} : it->second;
}

void ToyPolicy::set_logits(int bucket, int position, const Logits& l) {
  for (double x : l) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "toy logits must be finite");
  }
  logits_[{bucket, position}] = l;
}

ToyPolicy::Logits& ToyPolicy::mutable_logits(int bucket, int position) { return logits_[{bucket, position}]; }

std::array<double, kNumTiers> ToyPolicy::probabilities(int bucket, int position, std::optional<Tier> hint) const {
  Logits z = logits(bucket, position);
  if (hint) z[index(*hint)] += hint_strength_;
  return softmax(z);
}

double ToyPolicy::logprob(int bucket, int position, Tier token, std::optional<Tier> hint) const {
  Logits z = logits(bucket, position);
  if (hint) z[index(*hint)] += hint_strength_;
  const double top = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double x : z) s += std::exp(x - top);
  return z[index(token)] - top - std::log(s);
}

LossResult grpo_loss_toy(const ToyPolicy& policy, const GroupRollout& group, std::span<const double> advantages,
                         const ClipParams& clip) {
  return loss_impl(group, advantages, clip, [&](std::size_t i, std::size_t t) {
    return policy.logprob(group.bucket, static_cast<int>(t), group.outputs[i].tokens[t], group.privileged_hint);
  });
}

Gradient grpo_gradient_toy(const ToyPolicy& policy, const GroupRollout& group, std::span<const double> advantages,
                           const ClipParams& clip) {
  validate(clip);
  check_group(group, advantages);
  std::size_t total_tokens = 0;
  for (const auto& o : group.outputs) total_tokens += o.tokens.size();
  const double scale = -1.0 / static_cast<double>(total_tokens);

  // Contributions are gathered per coordinate and summed in sorted order so the
  // result does not depend on output order.
  std::map<ToyPolicy::Key, std::array<std::vector<double>, kNumTiers>> parts;
  for (std::size_t i = 0; i < group.outputs.size(); ++i) {
    const auto& o = group.outputs[i];
    for (std::size_t t = 0; t < o.tokens.size(); ++t) {
      const int pos = static_cast<int>(t);
      const double lp = policy.logprob(group.bucket, pos, o.tokens[t], group.privileged_hint);
      const double dterm = clipped_term(lp, o.reference_logprobs[t], advantages[i], clip).dterm_dlogprob;
      const auto p = policy.probabilities(group.bucket, pos, group.privileged_hint);
      auto& slot = parts[{group.bucket, pos}];
      for (std::size_t k = 0; k < kNumTiers; ++k) {
        const double dlp = (k == index(o.tokens[t]) ? 1.0 : 0.0) - p[k];
        slot[k].push_back(scale * dterm * dlp);
      }
    }
  }
  Gradient grad;
  for (auto& [key, coords] : parts) {
    auto& g = grad[key];
    for (std::size_t k = 0; k < kNumTiers; ++k) {
      std::sort(coords[k].begin(), coords[k].end());
      g[k] = std::accumulate(coords[k].begin(), coords[k].end(), 0.0);
    }
  }
  return grad;
}

GroupRollout toy_rollout(const ToyPolicy& policy, const ToyPrompt& prompt, std::size_t group_size,
                         std::uint64_t seed, std::optional<Tier> privileged_hint, const RewardSpec& spec) {
  if (group_size < 2) throw Error(ErrorCode::kGroupTooSmall, "a rollout group needs G >= 2");
  if (policy.max_tokens() < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
  GroupRollout group;
  group.prompt_id = prompt.id;
  group.bucket = prompt.bucket;
  group.privileged_hint = privileged_hint;
  for (std::size_t i = 0; i < group_size; ++i) {
    Rng rng = Rng::substream(seed, i);
    Output o;
    const std::size_t length = 1 + rng.uniform_index(static_cast<std::size_t>(policy.max_tokens()));
    for (std::size_t t = 0; t < length; ++t) {
      const int pos = static_cast<int>(t);
      const auto p = policy.probabilities(prompt.bucket, pos, privileged_hint);
      const Tier token = tier_at(rng.categorical(p));
      const double lp = policy.logprob(prompt.bucket, pos, token, privileged_hint);
      o.tokens.push_back(token);
      o.policy_logprobs.push_back(lp);
      o.reference_logprobs.push_back(lp);
    }
    o.reasoning_label = o.tokens.front();
    o.final_label = o.tokens.back();
    o.reward = reward(o.final_label, o.reasoning_label, prompt.truth, spec);
    group.outputs.push_back(std::move(o));
  }
  return group;
}

std::string_view route_name(Route r) noexcept { return r == Route::kPrivileged ? "privileged" : "standard"; }

std::vector<Route> route_privileged(const std::vector<std::vector<bool>>& diagnostic_correct,
                                    const RouterConfig& config) {
  if (config.k_diagnostic < 1) throw Error(ErrorCode::kInvalidArgument, "K must be at least 1");
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must lie in [0, 1]");
  std::vector<Route> routes;
  for (std::size_t s = 0; s < diagnostic_correct.size(); ++s) {
    const auto& flags = diagnostic_correct[s];
    if (flags.size() != config.k_diagnostic) {
      throw Error(ErrorCode::kWrongDiagnosticCount, "sample " + std::to_string(s) + " has " +
                                                        std::to_string(flags.size()) + " diagnostic outcomes, expected " +
                                                        std::to_string(config.k_diagnostic));
    }
    const auto correct = static_cast<double>(std::count(flags.begin(), flags.end(), true));
    routes.push_back(correct / static_cast<double>(config.k_diagnostic) < config.tau ? Route::kPrivileged
                                                                                    : Route::kStandard);
  }
  return routes;
}

// --- config -------------------------------------------------------------------------

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kSchemaError, "config line " + std::to_string(line_no) + " is not key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kSchemaError, "config key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::kSchemaError, "config key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kSchemaError, "config key '" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace

TrainConfig train_config_from_text(std::string_view text) {
  TrainConfig c;
  for (const auto& [k, v] : parse_key_values(text)) {
    if (k == "seed") c.seed = to_uint(k, v);
    else if (k == "steps") c.steps = to_uint(k, v);
    else if (k == "prompts") c.prompts = to_uint(k, v);
    else if (k == "buckets") c.buckets = to_uint(k, v);
    else if (k == "group_size") c.group_size = to_uint(k, v);
    else if (k == "inner_epochs") c.inner_epochs = to_uint(k, v);
    else if (k == "learning_rate") c.learning_rate = to_double(k, v);
    else if (k == "privileged_sampling") c.privileged_sampling = to_bool(k, v);
    else if (k == "max_tokens") c.max_tokens = static_cast<int>(to_uint(k, v));
    else if (k == "hint_strength") c.hint_strength = to_double(k, v);
    else if (k == "exact_reward") c.reward.exact_reward = to_double(k, v);
    else if (k == "adjacent_reward") c.reward.adjacent_reward = to_double(k, v);
    else if (k == "far_reward") c.reward.far_reward = to_double(k, v);
    else if (k == "epsilon") c.clip.epsilon = to_double(k, v);
    else if (k == "epsilon_higher") c.clip.epsilon_higher = to_double(k, v);
    else if (k == "sigma_floor") c.clip.sigma_floor = to_double(k, v);
    else if (k == "k_diagnostic") c.router.k_diagnostic = to_uint(k, v);
    else if (k == "tau") c.router.tau = to_double(k, v);
    else throw Error(ErrorCode::kSchemaError, "unknown config key '" + k + "'");
  }
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"seed", c.seed},
          {"steps", c.steps},
          {"prompts", c.prompts},
          {"buckets", c.buckets},
          {"group_size", c.group_size},
          {"inner_epochs", c.inner_epochs},
          {"learning_rate", c.learning_rate},
          {"privileged_sampling", c.privileged_sampling},
          {"max_tokens", c.max_tokens},
          {"hint_strength", c.hint_strength},
          {"exact_reward", c.reward.exact_reward},
          {"adjacent_reward", c.reward.adjacent_reward},
          {"far_reward", c.reward.far_reward},
          {"epsilon", c.clip.epsilon},
          {"epsilon_higher", c.clip.epsilon_higher},
          {"sigma_floor", c.clip.sigma_floor},
          {"k_diagnostic", c.router.k_diagnostic},
          {"tau", c.router.tau}};
}

nlohmann::json to_json(const StepLog& s) {
  return {{"step", s.step},
          {"mean_reward", s.mean_reward},
          {"fraction_privileged", s.fraction_privileged},
          {"loss", s.loss},
          {"accuracy", s.accuracy},
          {"zero_advantage_groups", s.zero_advantage_groups}};
}

// --- training -----------------------------------------------------------------------

TrainResult train(const TrainConfig& config) {
  validate(config.clip);
  if (config.prompts == 0 || config.buckets == 0) throw Error(ErrorCode::kInvalidArgument, "prompts and buckets must be positive");
  if (config.reward.exact_reward < config.reward.adjacent_reward ||
      config.reward.adjacent_reward < config.reward.far_reward) {
    throw Error(ErrorCode::kInvalidArgument, "rewards must satisfy exact >= adjacent >= far");
  }
  // Stream ids: 0 = prompt truths, then per step and prompt a diagnostic and a
  // training rollout stream.
  std::vector<ToyPrompt> prompts;
  Rng truth_rng = Rng::substream(config.seed, 0);
  for (std::size_t i = 0; i < config.prompts; ++i) {
    prompts.push_back({"q" + std::to_string(i), static_cast<int>(i % config.buckets),
                       tier_at(truth_rng.uniform_index(kNumTiers))});
  }
  // Every prompt in a bucket shares a truth so the toy task is learnable.
  for (auto& p : prompts) p.truth = prompts[static_cast<std::size_t>(p.bucket)].truth;

  TrainResult result{ToyPolicy(config.max_tokens, config.hint_strength), {}};
  for (std::size_t step = 0; step < config.steps; ++step) {
    StepLog log;
    log.step = step;
    std::vector<GroupRollout> groups;
    std::vector<std::vector<double>> advantages;
    std::size_t privileged = 0, outputs = 0, hits = 0;
    std::vector<double> rewards_all;
    for (std::size_t q = 0; q < prompts.size(); ++q) {
      const std::uint64_t base = 1 + 2 * (step * prompts.size() + q);
      std::optional<Tier> hint;
      if (config.privileged_sampling) {
        const GroupRollout diag = toy_rollout(result.policy, prompts[q], std::max<std::size_t>(2, config.router.k_diagnostic),
                                              mix64(config.seed ^ base), std::nullopt, config.reward);
        std::vector<bool> flags;
        for (std::size_t k = 0; k < config.router.k_diagnostic; ++k) {
          flags.push_back(diag.outputs[k].reward == config.reward.exact_reward);
        }
        if (route_privileged({flags}, config.router).front() == Route::kPrivileged) {
          hint = prompts[q].truth;
          ++privileged;
        }
      }
      GroupRollout g = toy_rollout(result.policy, prompts[q], config.group_size, mix64(config.seed ^ (base + 1)), hint,
                                   config.reward);
      std::vector<double> rewards;
      for (const auto& o : g.outputs) {
        rewards.push_back(o.reward);
        rewards_all.push_back(o.reward);
        hits += o.final_label == prompts[q].truth;
        ++outputs;
      }
      auto adv = normalize_advantages(rewards, config.clip.sigma_floor);
      if (std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; })) ++log.zero_advantage_groups;
      groups.push_back(std::move(g));
      advantages.push_back(std::move(adv));
    }

    std::vector<double> losses;
    for (std::size_t epoch = 0; epoch < std::max<std::size_t>(1, config.inner_epochs); ++epoch) {
      std::map<ToyPolicy::Key, std::array<std::vector<double>, kNumTiers>> parts;
      losses.clear();
      for (std::size_t q = 0; q < groups.size(); ++q) {
        losses.push_back(grpo_loss_toy(result.policy, groups[q], advantages[q], config.clip).loss);
        for (const auto& [key, g] : grpo_gradient_toy(result.policy, groups[q], advantages[q], config.clip)) {
          for (std::size_t k = 0; k < kNumTiers; ++k) parts[key][k].push_back(g[k]);
        }
      }
      const double lr = config.learning_rate / static_cast<double>(groups.size());
      for (auto& [key, coords] : parts) {
        auto& logits = result.policy.mutable_logits(key.first, key.second);
        for (std::size_t k = 0; k < kNumTiers; ++k) {
          std::sort(coords[k].begin(), coords[k].end());
          logits[k] -= lr * std::accumulate(coords[k].begin(), coords[k].end(), 0.0);
        }
      }
    }
    std::sort(losses.begin(), losses.end());
    std::sort(rewards_all.begin(), rewards_all.end());
    log.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    log.mean_reward =
        std::accumulate(rewards_all.begin(), rewards_all.end(), 0.0) / static_cast<double>(rewards_all.size());
    log.fraction_privileged = static_cast<double>(privileged) / static_cast<double>(prompts.size());
    log.accuracy = static_cast<double>(hits) / static_cast<double>(outputs);
    result.log.push_back(log);
  }
  return result;
}

}  // namespace tierbench::rl
