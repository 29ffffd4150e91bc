#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/ingest.hpp"
#include "tierbench/stats.hpp"

namespace tierbench {

enum class PresentedOrder { kLowFirst, kHighFirst };

struct PairItem {
  std::string id;
  std::string pitch_low;   // worse tier
  std::string pitch_high;  // better tier
  int distance = 1;
  std::string pair_type;   // "<low tier>_<high tier>", e.g. fair_strong
  PresentedOrder presented_order = PresentedOrder::kLowFirst;

  bool operator==(const PairItem&) const = default;
};

struct PairSet {
  std::string benchmark_id;
  std::uint64_t seed = 0;
  std::map<int, std::size_t> strata;
  std::vector<PairItem> pairs;

  const PairItem* find(std::string_view pair_id) const;
};

std::string pair_type_name(Tier low, Tier high);
// The six cross-tier types in fixed order: distance 1, then 2, then 3.
const std::vector<std::pair<Tier, Tier>>& pair_types();  // (low, high)

inline std::map<int, std::size_t> default_strata() { return {{1, 150}, {2, 100}, {3, 50}}; }

// Within each stratum the types get equal quotas; the remainder goes to types
// picked by seeded draw, with overflow past a type's capacity moving on to
// types that still have room. Throws InsufficientPairs naming the stratum.
PairSet build_pairs(const BenchmarkSet& bench, std::uint64_t seed,
                    const std::map<int, std::size_t>& strata = default_strata());

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct PairScore {
  std::map<int, Tally> per_distance;
  std::map<std::string, Tally> per_type;
  Tally overall;
  std::size_t missing = 0;  // pairs without a choice, scored incorrect
};

using PairChoices = std::map<std::string, std::string>;  // pair id -> chosen pitch id

// Missing choices count as incorrect. A choice naming a pitch outside its pair
// raises ForeignPitchId; a choice for an unknown pair raises UnknownPairId.
PairScore score_pairs(const PairChoices& choices, const PairSet& pairs);

struct Discordance {
  std::size_t a_only = 0;
  std::size_t b_only = 0;
  std::size_t both = 0;
  std::size_t neither = 0;
  TestResult mcnemar;
};

Discordance discordance(const PairChoices& choices_a, const PairChoices& choices_b, const PairSet& pairs);

nlohmann::json to_json(const PairItem& p);
PairItem pair_from_json(const nlohmann::json& j);
std::string serialize_pairs(const PairSet& set);
PairSet parse_pairs(std::string_view text, std::string_view source_name);
PairSet load_pairs(const std::filesystem::path& path);
PairChoices parse_choices(std::string_view text, std::string_view source_name);
PairChoices load_choices(const std::filesystem::path& path);

nlohmann::json to_json(const PairScore& s);
nlohmann::json to_json(const Discordance& d);

}  // namespace tierbench
