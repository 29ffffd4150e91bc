#include "tierbench/pairwise.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "tierbench/error.hpp"
#include "tierbench/io.hpp"
#include "tierbench/random.hpp"

namespace tierbench {

std::string pair_type_name(Tier low, Tier high) { return std::string(name(low)) + "_" + std::string(name(high)); }

const std::vector<std::pair<Tier, Tier>>& pair_types() {
  static const std::vector<std::pair<Tier, Tier>> types = {
      {Tier::kStrong, Tier::kExceptional}, {Tier::kFair, Tier::kStrong},    {Tier::kLimited, Tier::kFair},
      {Tier::kFair, Tier::kExceptional},   {Tier::kLimited, Tier::kStrong}, {Tier::kLimited, Tier::kExceptional},
  };
  return types;
}

const PairItem* PairSet::find(std::string_view pair_id) const {
  for (const auto& p : pairs) {
    if (p.id == pair_id) return &p;
  }
  return nullptr;
}

namespace {

std::string pair_id(std::size_t i, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(total).size());
  std::string s = std::to_string(i);
  return "p" + std::string(width - s.size(), '0') + s;
}

}  // namespace

PairSet build_pairs(const BenchmarkSet& bench, std::uint64_t seed, const std::map<int, std::size_t>& strata) {
  // Pitches per tier in id order, so the result ignores file order.
  std::array<std::vector<std::string>, kNumTiers> by_tier;
  for (const auto& p : bench.pitches) by_tier[index(p.truth)].push_back(p.id);
  for (auto& ids : by_tier) std::sort(ids.begin(), ids.end());

  PairSet set;
  set.benchmark_id = bench.id;
  set.seed = seed;
  set.strata = strata;
  Rng rng(seed);

  std::size_t total = 0;
  for (const auto& [d, count] : strata) total += count;
  std::size_t next_id = 1;

  for (const auto& [distance, count] : strata) {
    if (distance < 1 || distance > 3) {
      throw Error(ErrorCode::kInvalidArgument, "pair distance must be 1, 2 or 3 (got " + std::to_string(distance) + ")");
    }
    std::vector<std::pair<Tier, Tier>> types;
    for (const auto& t : pair_types()) {
      if (ordinal_distance(t.first, t.second) == distance) types.push_back(t);
    }
    std::vector<std::size_t> capacity;
    std::size_t available = 0;
    for (const auto& [low, high] : types) {
      capacity.push_back(by_tier[index(low)].size() * by_tier[index(high)].size());
      available += capacity.back();
    }
    if (count > available) {
      throw Error(ErrorCode::kInsufficientPairs, "distance " + std::to_string(distance) + " stratum asks for " +
                                                     std::to_string(count) + " pairs but only " +
                                                     std::to_string(available) + " exist");
    }

    // Even quotas, clipped to capacity; leftovers go one at a time to a
    // randomly drawn type among those with spare capacity.
    std::vector<std::size_t> quota(types.size(), 0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < types.size(); ++i) {
      quota[i] = std::min(count / types.size(), capacity[i]);
      assigned += quota[i];
    }
    while (assigned < count) {
      std::vector<std::size_t> open;
      for (std::size_t i = 0; i < types.size(); ++i) {
        if (quota[i] < capacity[i]) open.push_back(i);
      }
      ++quota[open[rng.uniform_index(open.size())]];
      ++assigned;
    }

    for (std::size_t i = 0; i < types.size(); ++i) {
      const auto& lows = by_tier[index(types[i].first)];
      const auto& highs = by_tier[index(types[i].second)];
      std::vector<std::size_t> cells(capacity[i]);
      std::iota(cells.begin(), cells.end(), 0);
      rng.partial_shuffle(std::span(cells), quota[i]);
      for (std::size_t q = 0; q < quota[i]; ++q) {
        PairItem item;
        item.pitch_low = lows[cells[q] / highs.size()];
        item.pitch_high = highs[cells[q] % highs.size()];
        item.distance = distance;
        item.pair_type = pair_type_name(types[i].first, types[i].second);
        item.presented_order = rng.bernoulli(0.5) ? PresentedOrder::kHighFirst : PresentedOrder::kLowFirst;
        item.id = pair_id(next_id++, total);
        set.pairs.push_back(std::move(item));
      }
    }
  }
  return set;
}

PairScore score_pairs(const PairChoices& choices, const PairSet& pairs) {
  std::map<std::string_view, const PairItem*> by_id;
  for (const auto& p : pairs.pairs) by_id.emplace(p.id, &p);
  for (const auto& [pair, chosen] : choices) {
    const auto it = by_id.find(pair);
    if (it == by_id.end()) throw Error(ErrorCode::kUnknownPairId, "choice for unknown pair '" + pair + "'");
    if (chosen != it->second->pitch_low && chosen != it->second->pitch_high) {
      throw Error(ErrorCode::kForeignPitchId, "pair '" + pair + "' does not contain pitch '" + chosen + "'");
    }
  }
  PairScore score;
  for (const auto& p : pairs.pairs) {
    const auto it = choices.find(p.id);
    const bool correct = it != choices.end() && it->second == p.pitch_high;
    if (it == choices.end()) ++score.missing;
    for (Tally* t : {&score.per_distance[p.distance], &score.per_type[p.pair_type], &score.overall}) {
      ++t->total;
      t->correct += correct;
    }
  }
  return score;
}

Discordance discordance(const PairChoices& choices_a, const PairChoices& choices_b, const PairSet& pairs) {
  // Validates both maps against the pair set.
  score_pairs(choices_a, pairs);
  score_pairs(choices_b, pairs);
  Discordance d;
  for (const auto& p : pairs.pairs) {
    const auto a = choices_a.find(p.id);
    const auto b = choices_b.find(p.id);
    const bool ca = a != choices_a.end() && a->second == p.pitch_high;
    const bool cb = b != choices_b.end() && b->second == p.pitch_high;
    if (ca && cb) {
      ++d.both;
    } else if (ca) {
      ++d.a_only;
    } else if (cb) {
      ++d.b_only;
    } else {
      ++d.neither;
    }
  }
  d.mcnemar = mcnemar_counts(d.a_only, d.b_only, McNemarMode::kExact);
  return d;
}

nlohmann::json to_json(const PairItem& p) {
  return {{"id", p.id},
          {"pitch_low", p.pitch_low},
          {"pitch_high", p.pitch_high},
          {"distance", p.distance},
          {"pair_type", p.pair_type},
          {"presented_order", p.presented_order == PresentedOrder::kLowFirst ? "low_first" : "high_first"}};
}

PairItem pair_from_json(const nlohmann::json& j) {
  PairItem p;
  try {
    p.id = j.at("id").get<std::string>();
    p.pitch_low = j.at("pitch_low").get<std::string>();
    p.pitch_high = j.at("pitch_high").get<std::string>();
    p.distance = j.at("distance").get<int>();
    p.pair_type = j.at("pair_type").get<std::string>();
    const std::string order = j.at("presented_order").get<std::string>();
    if (order != "low_first" && order != "high_first") {
      throw Error(ErrorCode::kSchemaError, "presented_order must be low_first or high_first");
    }
    p.presented_order = order == "low_first" ? PresentedOrder::kLowFirst : PresentedOrder::kHighFirst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaError, e.what());
  }
  return p;
}

std::string serialize_pairs(const PairSet& set) {
  std::vector<nlohmann::json> lines;
  nlohmann::json strata = nlohmann::json::object();
  for (const auto& [d, c] : set.strata) strata[std::to_string(d)] = c;
  lines.push_back({{"header", {{"benchmark_id", set.benchmark_id}, {"seed", set.seed}, {"strata", strata}}}});
  for (const auto& p : set.pairs) lines.push_back(to_json(p));
  return io::to_jsonl(lines);
}

PairSet parse_pairs(std::string_view text, std::string_view source_name) {
  PairSet set;
  std::set<std::string> seen;
  for (const auto& line : io::parse_jsonl(text, source_name)) {
    const std::string where = std::string(source_name) + ":" + std::to_string(line.line_no) + ": ";
    try {
      if (line.value.contains("header")) {
        const auto& h = line.value["header"];
        set.benchmark_id = h.value("benchmark_id", "");
        set.seed = h.value("seed", std::uint64_t{0});
        if (h.contains("strata")) {
          for (auto it = h["strata"].begin(); it != h["strata"].end(); ++it) {
            set.strata[std::stoi(it.key())] = it.value().get<std::size_t>();
          }
        }
        continue;
      }
      PairItem p = pair_from_json(line.value);
      if (!seen.insert(p.id).second) throw Error(ErrorCode::kSchemaError, "duplicate pair id '" + p.id + "'");
      set.pairs.push_back(std::move(p));
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaError, where + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kSchemaError, where + e.what());
    }
  }
  if (set.pairs.empty()) throw Error(ErrorCode::kEmptyFile, std::string(source_name) + " has no pairs");
  return set;
}

PairSet load_pairs(const std::filesystem::path& path) { return parse_pairs(io::read_file(path), path.string()); }

PairChoices parse_choices(std::string_view text, std::string_view source_name) {
  PairChoices choices;
  for (const auto& line : io::parse_jsonl(text, source_name)) {
    const std::string where = std::string(source_name) + ":" + std::to_string(line.line_no) + ": ";
    if (line.value.contains("header")) continue;
    try {
      const std::string pair = line.value.at("pair_id").get<std::string>();
      const std::string chosen = line.value.at("chosen_pitch_id").get<std::string>();
      if (!choices.emplace(pair, chosen).second) {
        throw Error(ErrorCode::kSchemaError, "duplicate choice for pair '" + pair + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaError, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaError, where + e.what());
    }
  }
  return choices;
}

PairChoices load_choices(const std::filesystem::path& path) {
  return parse_choices(io::read_file(path), path.string());
}

namespace {

nlohmann::json tally_json(const Tally& t) {
  return {{"correct", t.correct}, {"total", t.total}, {"accuracy", t.accuracy()},
          {"percent", format_percent(t.accuracy(), 2)}};
}

}  // namespace

nlohmann::json to_json(const PairScore& s) {
  nlohmann::json j;
  nlohmann::json dist = nlohmann::json::object();
  for (const auto& [d, t] : s.per_distance) dist[std::to_string(d)] = tally_json(t);
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [name, t] : s.per_type) types[name] = tally_json(t);
  j["per_distance"] = dist;
  j["per_type"] = types;
  j["overall"] = tally_json(s.overall);
  j["missing"] = s.missing;
  return j;
}

nlohmann::json to_json(const Discordance& d) {
  return {{"a_only", d.a_only}, {"b_only", d.b_only}, {"both", d.both}, {"neither", d.neither},
          {"mcnemar", to_json(d.mcnemar)}};
}

}  // namespace tierbench
