#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tierbench {

// Ordinal quality tier. Codes run best (1) to worst (4); ascending code is also
// the fixed tie-break order used everywhere a deterministic choice is needed.
enum class Tier : std::uint8_t {
  kExceptional = 1,
  kStrong = 2,
  kFair = 3,
  kLimited = 4,
};

inline constexpr std::size_t kNumTiers = 4;
inline constexpr std::array<Tier, kNumTiers> kAllTiers = {
    Tier::kExceptional, Tier::kStrong, Tier::kFair, Tier::kLimited};

// Chance rate of the balanced four-tier task.
inline constexpr double kFourTierChance = 0.25;

constexpr int code(Tier t) noexcept { return static_cast<int>(t); }
// Zero-based slot for arrays indexed by tier.
constexpr std::size_t index(Tier t) noexcept { return static_cast<std::size_t>(t) - 1; }
constexpr Tier tier_at(std::size_t i) noexcept { return kAllTiers[i]; }

// Lowercase canonical name: exceptional, strong, fair, limited.
std::string_view name(Tier t) noexcept;
Tier tier_from_code(int code);
// Case-insensitive match on the canonical names; no other cleanup.
std::optional<Tier> tier_from_name(std::string_view name);

enum class Field { kManagement, kEconomics };
std::string_view field_name(Field f) noexcept;
Field field_from_name(std::string_view name);

enum class LabelSource { kModel, kHumanSurvey, kMetadata };

// Deterministic mapping of a raw label into the unified tier space.
//   model         exceptional / strong / fair / limited (case-insensitive)
//   human_survey  Top / Top- / Good / Fair
//   metadata      top / top- / good / fair
// Note that "Fair" from a survey or metadata is the *lowest* tier.
Tier normalize_label(std::string_view raw, LabelSource source);

// Human-facing survey shorthand for a tier (inverse of the human_survey mapping).
std::string_view survey_label(Tier t) noexcept;

int ordinal_distance(Tier a, Tier b) noexcept;

// Fraction of the improvable range above chance that an accuracy captures.
// Negative below chance.
double headroom(double accuracy, double chance = kFourTierChance);

// Percent string with a fixed number of decimals, rounding half away from zero.
// format_percent(0.325) == "32.5".
std::string format_percent(double fraction, int decimals = 1);
std::string format_fixed(double value, int decimals);

struct Pitch {
  std::string id;
  Field field = Field::kManagement;
  std::string text_full;
  std::optional<std::string> text_short;
  Tier truth = Tier::kExceptional;
  std::optional<std::string> journal;
  std::optional<std::string> research_domain;

  bool operator==(const Pitch&) const = default;
};

// Lowercase, collapse internal whitespace, strip leading/trailing punctuation.
std::string normalize_journal_name(std::string_view name);

class JournalTierMap {
 public:
  struct Entry {
    Field field;
    std::string full_name;
    Tier tier;
    std::string issn;
    std::string eissn;
  };

  // CSV with header row: field,journal_full_name,tier,issn,eissn
  static JournalTierMap from_csv(std::istream& in);
  static JournalTierMap load_csv(const std::string& path);
  // The shipped 19-journal management and 38-journal economics universes.
  static const JournalTierMap& builtin();

  // Full-name lookup first, ISSN/eISSN as a fallback. Throws UnknownJournal
  // with the nearest names when neither matches.
  Tier tier_for(std::string_view name_or_issn, Field field) const;
  std::optional<Tier> find(std::string_view name_or_issn, Field field) const;

  std::size_t size(Field field) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<std::string> nearest_names(std::string_view name, Field field,
                                         std::size_t limit = 3) const;

 private:
  void add(Entry entry);

  std::vector<Entry> entries_;
  std::map<std::pair<Field, std::string>, std::size_t> by_name_;
  std::map<std::pair<Field, std::string>, std::size_t> by_issn_;
};

inline Tier tier_for_journal(std::string_view name, Field field, const JournalTierMap& map) {
  return map.tier_for(name, field);
}

}  // namespace tierbench
