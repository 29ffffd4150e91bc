#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tierbench/ingest.hpp"
#include "tierbench/pairwise.hpp"

namespace tierbench::fixtures {

std::filesystem::path path(const std::string& name);

// 120 pitches, 30 per tier, ids m001..m120 in tier blocks.
BenchmarkSet bench_120();

// label_only predictions for bench_120 whose confusion has diagonal
// (6,18,15,0) and predicted column sums (14,49,57,0).
PredictionFile confusion_fixture();

// Balanced benchmark with `per_tier` synthetic pitches per tier.
BenchmarkSet synthetic_bench(std::size_t per_tier);

// Choices picking the better pitch for the first correct[d] pairs of each
// distance d (in pair order) and the worse pitch for the rest.
PairChoices choices_with(const PairSet& pairs, const std::map<int, std::size_t>& correct);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace tierbench::fixtures
