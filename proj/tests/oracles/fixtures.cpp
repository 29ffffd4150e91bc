#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace tierbench::fixtures {

std::filesystem::path path(const std::string& name) { return std::filesystem::path(TIERBENCH_FIXTURE_DIR) / name; }

BenchmarkSet bench_120() { return load_benchmark(path("bench_120.jsonl")); }

PredictionFile confusion_fixture() { return load_predictions(path("confusion_fixture_predictions.jsonl")); }

BenchmarkSet synthetic_bench(std::size_t per_tier) {
  BenchmarkSet b;
  b.id = "synthetic";
  std::size_t n = 0;
  for (Tier t : kAllTiers) {
    for (std::size_t i = 0; i < per_tier; ++i) {
      Pitch p;
      char buf[16];
      std::snprintf(buf, sizeof buf, "s%04zu", ++n);
      p.id = buf;
      p.text_full = "pitch " + p.id;
      p.truth = t;
      b.pitches.push_back(std::move(p));
    }
  }
  b.per_tier_count = per_tier;
  return b;
}

PairChoices choices_with(const PairSet& pairs, const std::map<int, std::size_t>& correct) {
  std::map<int, std::size_t> used;
  PairChoices out;
  for (const auto& p : pairs.pairs) {
    const auto it = correct.find(p.distance);
    const std::size_t quota = it == correct.end() ? 0 : it->second;
    out[p.id] = used[p.distance]++ < quota ? p.pitch_high : p.pitch_low;
  }
  return out;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("tierbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tierbench::fixtures
