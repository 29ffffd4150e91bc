#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tierbench/random.hpp"
#include "tierbench/stats.hpp"

namespace tierbench {
namespace {

PitchRatings random_ratings(std::size_t items, std::size_t raters) {
  Rng rng(5);
  PitchRatings r;
  for (std::size_t i = 0; i < items; ++i) {
    auto& v = r["p" + std::to_string(i)];
    const Tier base = tier_at(rng.uniform_index(kNumTiers));
    for (std::size_t k = 0; k < raters; ++k) v.push_back(rng.bernoulli(0.6) ? base : tier_at(rng.uniform_index(kNumTiers)));
  }
  return r;
}

void BM_FleissKappa(benchmark::State& state) {
  const auto r = random_ratings(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(fleiss_kappa(r));
}
BENCHMARK(BM_FleissKappa)->Arg(120)->Arg(2000);

void BM_KrippendorffOrdinal(benchmark::State& state) {
  const auto r = random_ratings(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(krippendorff_alpha_ordinal(r));
}
BENCHMARK(BM_KrippendorffOrdinal)->Arg(120)->Arg(2000);

void BM_MatchedNSubsample(benchmark::State& state) {
  Rng rng(6);
  PanelRatings panel;
  std::map<std::string, Tier, std::less<>> truths;
  for (int i = 0; i < 120; ++i) {
    const std::string id = "p" + std::to_string(i);
    truths[id] = tier_at(static_cast<std::size_t>(i) % kNumTiers);
    const std::size_t n = 2 + rng.uniform_index(6);
    for (std::size_t k = 0; k < n; ++k) {
      panel[id].emplace_back("r" + std::to_string(k), tier_at(rng.uniform_index(kNumTiers)));
    }
  }
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(matched_n_subsample(panel, truths, 3, 5000, 7, 0.95, threads));
}
BENCHMARK(BM_MatchedNSubsample)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_McNemarExact(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mcnemar_counts(380, 140, McNemarMode::kExact));
}
BENCHMARK(BM_McNemarExact);

void BM_MannWhitneyExact(benchmark::State& state) {
  Rng rng(8);
  std::vector<double> x, y;
  for (int i = 0; i < state.range(0); ++i) {
    x.push_back(rng.normal());
    y.push_back(rng.normal());
  }
  for (auto _ : state) benchmark::DoNotOptimize(mann_whitney(x, y, Sidedness::kTwoSided, MwuMethod::kExact));
}
BENCHMARK(BM_MannWhitneyExact)->Arg(10)->Arg(40);

}  // namespace
}  // namespace tierbench
