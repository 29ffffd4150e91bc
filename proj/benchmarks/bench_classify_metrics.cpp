#include <vector>

#include <benchmark/benchmark.h>

#include "tierbench/calibrate.hpp"
#include "tierbench/classify.hpp"
#include "tierbench/metrics.hpp"
#include "tierbench/random.hpp"

namespace tierbench {
namespace {

std::vector<LabelLogprobs> random_logprobs(std::size_t n) {
  Rng rng(1);
  std::vector<LabelLogprobs> out(n);
  for (auto& lp : out) {
    for (auto& v : lp) v = -6.0 * rng.uniform01();
  }
  return out;
}

void BM_ClassifyLogprob(benchmark::State& state) {
  const auto maps = random_logprobs(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify_logprob(maps[i++ & 1023]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ClassifyLogprob);

void labels(std::size_t n, std::vector<Tier>& preds, std::vector<Tier>& truths) {
  Rng rng(2);
  for (std::size_t i = 0; i < n; ++i) {
    truths.push_back(tier_at(i % kNumTiers));
    preds.push_back(rng.bernoulli(0.4) ? truths.back() : tier_at(rng.uniform_index(kNumTiers)));
  }
}

void BM_ConfusionSummary(benchmark::State& state) {
  std::vector<Tier> p, t;
  labels(static_cast<std::size_t>(state.range(0)), p, t);
  for (auto _ : state) benchmark::DoNotOptimize(summarize(confusion(p, t)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConfusionSummary)->Arg(120)->Arg(10000);

void BM_MacroF1Bootstrap(benchmark::State& state) {
  std::vector<Tier> p, t;
  labels(120, p, t);
  BootstrapOptions opt;
  opt.draws = static_cast<std::size_t>(state.range(0));
  opt.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(macro_f1_bootstrap_ci(p, t, opt));
}
BENCHMARK(BM_MacroF1Bootstrap)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BrierDecomposition(benchmark::State& state) {
  Rng rng(4);
  std::vector<LabelDistribution> d;
  std::vector<Tier> t;
  for (int i = 0; i < 10000; ++i) {
    std::array<double, kNumTiers> w{};
    double s = 0;
    for (auto& x : w) s += (x = rng.uniform01() + 1e-3);
    for (auto& x : w) x /= s;
    w[3] = 1.0 - w[0] - w[1] - w[2];
    d.push_back(LabelDistribution::from_probabilities(w));
    t.push_back(tier_at(rng.uniform_index(kNumTiers)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(brier_decomposition(d, t));
}
BENCHMARK(BM_BrierDecomposition)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace tierbench
