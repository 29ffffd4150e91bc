#include "tierbench/tiers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tierbench/assets.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"

namespace tierbench {

namespace {

std::string lower_trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(begin, end - begin + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::string_view name(Tier t) noexcept {
  switch (t) {
    case Tier::kExceptional: return "exceptional";
    case Tier::kStrong: return "strong";
    case Tier::kFair: return "fair";
    case Tier::kLimited: return "limited";
  }
  return "exceptional";
}

Tier tier_from_code(int c) {
  if (c < 1 || c > 4) throw Error(ErrorCode::kUnknownLabel, "tier code out of range: " + std::to_string(c));
  return static_cast<Tier>(c);
}

std::optional<Tier> tier_from_name(std::string_view raw) {
  const std::string key = lower_trim(raw);
  for (Tier t : kAllTiers) {
    if (key == name(t)) return t;
  }
  return std::nullopt;
}

std::string_view field_name(Field f) noexcept {
  return f == Field::kManagement ? "management" : "economics";
}

Field field_from_name(std::string_view raw) {
  const std::string key = lower_trim(raw);
  if (key == "management") return Field::kManagement;
  if (key == "economics") return Field::kEconomics;
  throw Error(ErrorCode::kSchemaError, "unknown field '" + std::string(raw) + "'");
}

Tier normalize_label(std::string_view raw, LabelSource source) {
  const std::string key = lower_trim(raw);
  if (key.empty()) throw Error(ErrorCode::kUnknownLabel, "empty label");
  switch (source) {
    case LabelSource::kModel:
      if (auto t = tier_from_name(key)) return *t;
      break;
    case LabelSource::kHumanSurvey:
    case LabelSource::kMetadata:
      // Same shorthand in both sources; surveys capitalize it.
      if (key == "top") return Tier::kExceptional;
      if (key == "top-") return Tier::kStrong;
      if (key == "good") return Tier::kFair;
      if (key == "fair") return Tier::kLimited;
      break;
  }
  throw Error(ErrorCode::kUnknownLabel, "'" + std::string(raw) + "' is not a valid label for this source");
}

std::string_view survey_label(Tier t) noexcept {
  switch (t) {
    case Tier::kExceptional: return "Top";
    case Tier::kStrong: return "Top-";
    case Tier::kFair: return "Good";
    case Tier::kLimited: return "Fair";
  }
  return "Top";
}

int ordinal_distance(Tier a, Tier b) noexcept { return std::abs(code(a) - code(b)); }

double headroom(double accuracy, double chance) {
  if (!(chance >= 0.0 && chance < 1.0)) {
    throw Error(ErrorCode::kChanceOutOfRange, "chance must lie in [0, 1)");
  }
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "accuracy must lie in [0, 1]");
  }
  return (accuracy - chance) / (1.0 - chance);
}

std::string format_fixed(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  double scaled = value * scale;
  // Nudge by far less than one display unit so that values like 47.75 stored
  // as 47.7499999... still round away from zero.
  scaled += std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled);
  double rounded = std::round(scaled) / scale;
  if (rounded == 0.0) rounded = 0.0;  // no "-0.0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

std::string format_percent(double fraction, int decimals) { return format_fixed(fraction * 100.0, decimals); }

std::string normalize_journal_name(std::string_view raw) {
  std::string collapsed;
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed += ' ';
    pending_space = false;
    collapsed += static_cast<char>(std::tolower(c));
  }
  std::size_t b = 0, e = collapsed.size();
  while (b < e && (std::ispunct(static_cast<unsigned char>(collapsed[b])) ||
                   collapsed[b] == ' ')) ++b;
  while (e > b && (std::ispunct(static_cast<unsigned char>(collapsed[e - 1])) ||
                   collapsed[e - 1] == ' ')) --e;
  return collapsed.substr(b, e - b);
}

void JournalTierMap::add(Entry entry) {
  const std::string key = normalize_journal_name(entry.full_name);
  if (key.empty()) throw Error(ErrorCode::kSchemaError, "empty journal name");
  const auto name_key = std::make_pair(entry.field, key);
  if (by_name_.count(name_key)) {
    throw Error(ErrorCode::kSchemaError, "journal listed twice: " + entry.full_name);
  }
  const std::size_t idx = entries_.size();
  by_name_.emplace(name_key, idx);
  for (const std::string* issn : {&entry.issn, &entry.eissn}) {
    const std::string k = lower_trim(*issn);
    if (!k.empty()) by_issn_.emplace(std::make_pair(entry.field, k), idx);
  }
  entries_.push_back(std::move(entry));
}

JournalTierMap JournalTierMap::from_csv(std::istream& in) {
  JournalTierMap map;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = io::parse_csv_line(line);
    if (!header_seen) {
      if (fields.size() < 3 || lower_trim(fields[0]) != "field" ||
          lower_trim(fields[1]) != "journal_full_name" || lower_trim(fields[2]) != "tier") {
        throw Error(ErrorCode::kSchemaError,
                    "journal map needs header field,journal_full_name,tier,issn,eissn");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() < 3) {
      throw Error(ErrorCode::kSchemaError, "journal map line " + std::to_string(line_no) + ": too few columns");
    }
    fields.resize(5);
    Entry e;
    e.field = field_from_name(fields[0]);
    e.full_name = fields[1];
    auto tier = tier_from_name(fields[2]);
    if (!tier) {
      throw Error(ErrorCode::kSchemaError,
                  "journal map line " + std::to_string(line_no) + ": bad tier '" + fields[2] + "'");
    }
    e.tier = *tier;
    e.issn = fields[3];
    e.eissn = fields[4];
    map.add(std::move(e));
  }
  if (!header_seen) throw Error(ErrorCode::kEmptyFile, "journal map is empty");
  return map;
}

JournalTierMap JournalTierMap::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return from_csv(in);
}

const JournalTierMap& JournalTierMap::builtin() {
  static const JournalTierMap kMap = [] {
    std::istringstream in{std::string(asset_text("journals.csv"))};
    return from_csv(in);
  }();
  return kMap;
}

std::optional<Tier> JournalTierMap::find(std::string_view name_or_issn, Field field) const {
  if (auto it = by_name_.find({field, normalize_journal_name(name_or_issn)}); it != by_name_.end()) {
    return entries_[it->second].tier;
  }
  if (auto it = by_issn_.find({field, lower_trim(name_or_issn)}); it != by_issn_.end()) {
    return entries_[it->second].tier;
  }
  return std::nullopt;
}

Tier JournalTierMap::tier_for(std::string_view name_or_issn, Field field) const {
  if (auto t = find(name_or_issn, field)) return *t;
  std::string msg = "'" + std::string(name_or_issn) + "' is not in the " +
                    std::string(field_name(field)) + " journal map";
  const auto near = nearest_names(name_or_issn, field);
  if (!near.empty()) {
    msg += "; nearest:";
    for (std::size_t i = 0; i < near.size(); ++i) msg += (i ? ", " : " ") + near[i];
  }
  throw Error(ErrorCode::kUnknownJournal, msg);
}

std::size_t JournalTierMap::size(Field field) const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                [&](const Entry& e) { return e.field == field; }));
}

std::vector<std::string> JournalTierMap::nearest_names(std::string_view name, Field field,
                                                       std::size_t limit) const {
  const std::string key = normalize_journal_name(name);
  std::vector<std::pair<std::size_t, const Entry*>> scored;
  for (const auto& e : entries_) {
    if (e.field == field) scored.emplace_back(edit_distance(key, normalize_journal_name(e.full_name)), &e);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < limit; ++i) out.push_back(scored[i].second->full_name);
  return out;
}

}  // namespace tierbench
