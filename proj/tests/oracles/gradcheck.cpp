#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tierbench/random.hpp"
#include "tierbench/rlsim.hpp"

namespace tierbench::oracle {

namespace {

// Ratios this close to a clip edge make the loss non-differentiable within
// the finite-difference step; such draws are re-perturbed.
constexpr double kEdgeMargin = 1e-4;

bool near_edge(const rl::ToyPolicy& policy, const rl::GroupRollout& g, const rl::ClipParams& clip, bool& clipped) {
  clipped = false;
  for (const auto& o : g.outputs) {
    for (std::size_t t = 0; t < o.tokens.size(); ++t) {
      const double lp = policy.logprob(g.bucket, static_cast<int>(t), o.tokens[t], g.privileged_hint);
      const double r = std::exp(lp - o.reference_logprobs[t]);
      const double lo = 1.0 - clip.epsilon, hi = 1.0 + clip.epsilon + clip.epsilon_higher;
      if (std::abs(r - lo) < kEdgeMargin || std::abs(r - hi) < kEdgeMargin) return true;
      if (r < lo || r > hi) clipped = true;
    }
  }
  return false;
}

}  // namespace

GradCheck grpo_gradient_check(std::uint64_t seed) {
  Rng rng(seed);
  GradCheck out;
  out.group_size = 2 + static_cast<int>(rng.uniform_index(15));
  out.max_tokens = 1 + static_cast<int>(rng.uniform_index(4));
  rl::ClipParams clip;
  clip.epsilon = 0.05 + 0.3 * rng.uniform01();
  clip.epsilon_higher = 0.2 * rng.uniform01();
  rl::ToyPolicy base(out.max_tokens, 1.0 + 2.0 * rng.uniform01());
  for (int pos = 0; pos < out.max_tokens; ++pos) {
    auto& l = base.mutable_logits(0, pos);
    for (auto& v : l) v = rng.normal();
  }
  const rl::ToyPrompt prompt{"q", 0, tier_at(rng.uniform_index(4))};
  const std::optional<Tier> hint = rng.bernoulli(0.5) ? std::optional<Tier>(prompt.truth) : std::nullopt;
  const auto group = rl::toy_rollout(base, prompt, static_cast<std::size_t>(out.group_size), rng(), hint);
  std::vector<double> rewards;
  for (const auto& o : group.outputs) rewards.push_back(o.reward);
  auto adv = rl::normalize_advantages(rewards, clip.sigma_floor);
  // Identical rewards give a zero gradient; draw synthetic advantages so the
  // check exercises the surrogate.
  if (std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; })) {
    for (auto& a : adv) a = rng.normal();
  }

  rl::ToyPolicy policy = base;
  for (int attempt = 0;; ++attempt) {
    policy = base;
    for (int pos = 0; pos < out.max_tokens; ++pos) {
      for (auto& v : policy.mutable_logits(0, pos)) v += 0.4 * rng.normal();
    }
    if (!near_edge(policy, group, clip, out.any_clipped) || attempt > 100) break;
  }

  const auto grad = rl::grpo_gradient_toy(policy, group, adv, clip);
  const double h = 1e-5;
  double max_diff = 0.0, max_mag = 0.0;
  for (int pos = 0; pos < out.max_tokens; ++pos) {
    for (std::size_t k = 0; k < kNumTiers; ++k) {
      rl::ToyPolicy plus = policy, minus = policy;
      plus.mutable_logits(0, pos)[k] += h;
      minus.mutable_logits(0, pos)[k] -= h;
      const double fd = (rl::grpo_loss_toy(plus, group, adv, clip).loss -
                         rl::grpo_loss_toy(minus, group, adv, clip).loss) /
                        (2.0 * h);
      const auto it = grad.find({0, pos});
      const double an = it == grad.end() ? 0.0 : it->second[k];
      max_diff = std::max(max_diff, std::abs(an - fd));
      max_mag = std::max({max_mag, std::abs(an), std::abs(fd)});
    }
  }
  out.relative_error = max_diff / std::max(max_mag, 1e-6);
  return out;
}

}  // namespace tierbench::oracle
