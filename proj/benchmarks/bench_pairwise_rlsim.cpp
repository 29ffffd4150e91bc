#include <string>

#include <benchmark/benchmark.h>

#include "tierbench/ingest.hpp"
#include "tierbench/pairwise.hpp"
#include "tierbench/rlsim.hpp"

namespace tierbench {
namespace {

BenchmarkSet balanced(std::size_t per_tier) {
  BenchmarkSet b;
  b.id = "bench";
  b.per_tier_count = per_tier;
  for (Tier t : kAllTiers) {
    for (std::size_t i = 0; i < per_tier; ++i) {
      Pitch p;
      p.id = std::string(name(t)) + std::to_string(i);
      p.text_full = "pitch " + p.id;
      p.truth = t;
      b.pitches.push_back(p);
    }
  }
  return b;
}

void BM_BuildPairs(benchmark::State& state) {
  const auto bench = balanced(30);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_pairs(bench, seed++));
}
BENCHMARK(BM_BuildPairs)->Unit(benchmark::kMicrosecond);

void BM_GrpoGradient(benchmark::State& state) {
  rl::ToyPolicy policy(4, 2.0);
  const auto group = rl::toy_rollout(policy, {"q", 0, Tier::kFair}, static_cast<std::size_t>(state.range(0)), 9);
  std::vector<double> rewards;
  for (const auto& o : group.outputs) rewards.push_back(o.reward);
  rewards.front() += 1.0;
  const auto adv = rl::normalize_advantages(rewards);
  for (auto _ : state) benchmark::DoNotOptimize(rl::grpo_gradient_toy(policy, group, adv, rl::ClipParams{}));
}
BENCHMARK(BM_GrpoGradient)->Arg(8)->Arg(16);

void BM_TrainStep(benchmark::State& state) {
  rl::TrainConfig cfg;
  cfg.steps = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rl::train(cfg));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tierbench
