#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "tierbench/assets.hpp"
#include "tierbench/error.hpp"
#include "tierbench/tiers.hpp"

namespace tierbench {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

TEST(Tiers, CodesAndNamesRoundTrip) {
  for (Tier t : kAllTiers) {
    EXPECT_EQ(tier_from_code(code(t)), t);
    EXPECT_EQ(tier_from_name(name(t)), t);
    EXPECT_EQ(tier_at(index(t)), t);
  }
  EXPECT_EQ(code(Tier::kExceptional), 1);
  EXPECT_EQ(code(Tier::kLimited), 4);
  EXPECT_EQ(code_of([] { tier_from_code(5); }), ErrorCode::kUnknownLabel);
  EXPECT_FALSE(tier_from_name("excellent"));
}

TEST(Tiers, NormalizeLabelSources) {
  EXPECT_EQ(normalize_label("Strong", LabelSource::kModel), Tier::kStrong);
  EXPECT_EQ(normalize_label("Top", LabelSource::kHumanSurvey), Tier::kExceptional);
  EXPECT_EQ(normalize_label("Top-", LabelSource::kHumanSurvey), Tier::kStrong);
  EXPECT_EQ(normalize_label("Good", LabelSource::kHumanSurvey), Tier::kFair);
  EXPECT_EQ(normalize_label("Fair", LabelSource::kHumanSurvey), Tier::kLimited);
  EXPECT_EQ(normalize_label("fair", LabelSource::kMetadata), Tier::kLimited);
  EXPECT_EQ(normalize_label("fair", LabelSource::kModel), Tier::kFair);
  EXPECT_EQ(code_of([] { normalize_label("Top", LabelSource::kModel); }), ErrorCode::kUnknownLabel);
  EXPECT_EQ(code_of([] { normalize_label("", LabelSource::kMetadata); }), ErrorCode::kUnknownLabel);
  for (Tier t : kAllTiers) EXPECT_EQ(normalize_label(survey_label(t), LabelSource::kHumanSurvey), t);
}

TEST(Tiers, OrdinalDistance) {
  EXPECT_EQ(ordinal_distance(Tier::kExceptional, Tier::kLimited), 3);
  EXPECT_EQ(ordinal_distance(Tier::kFair, Tier::kStrong), 1);
  EXPECT_EQ(ordinal_distance(Tier::kFair, Tier::kFair), 0);
}

TEST(Tiers, HeadroomFormula) {
  EXPECT_DOUBLE_EQ(headroom(0.25), 0.0);
  EXPECT_DOUBLE_EQ(headroom(1.0), 1.0);
  EXPECT_NEAR(headroom(0.311), 0.081333333, 1e-8);
  EXPECT_LT(headroom(0.1), 0.0);
  EXPECT_DOUBLE_EQ(headroom(0.75, 0.5), 0.5);
  EXPECT_EQ(code_of([] { headroom(0.5, 1.0); }), ErrorCode::kChanceOutOfRange);
  EXPECT_EQ(code_of([] { headroom(0.5, -0.1); }), ErrorCode::kChanceOutOfRange);
}

TEST(Tiers, PercentFormatting) {
  EXPECT_EQ(format_percent(0.325), "32.5");
  EXPECT_EQ(format_percent(0.84333333, 2), "84.33");
  EXPECT_EQ(format_fixed(47.75, 1), "47.8");
  EXPECT_EQ(format_fixed(-0.0001, 2), "0.00");
}

TEST(Journals, BuiltinUniverseSizes) {
  const auto& m = JournalTierMap::builtin();
  EXPECT_EQ(m.size(Field::kManagement), 19u);
  EXPECT_EQ(m.size(Field::kEconomics), 38u);
}

TEST(Journals, LookupNormalizesNames) {
  const auto& m = JournalTierMap::builtin();
  EXPECT_EQ(m.tier_for("  academy of   management journal. ", Field::kManagement), Tier::kExceptional);
  EXPECT_EQ(m.tier_for("Journal of Management", Field::kManagement), Tier::kStrong);
  EXPECT_EQ(m.tier_for("Econometrica", Field::kEconomics), Tier::kExceptional);
  EXPECT_FALSE(m.find("Econometrica", Field::kManagement));
}

TEST(Journals, UnknownNameSuggestsNeighbours) {
  const auto& m = JournalTierMap::builtin();
  try {
    m.tier_for("Academy of Managment Journal", Field::kManagement);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownJournal);
    EXPECT_NE(std::string(e.what()).find("Academy of Management Journal"), std::string::npos);
  }
}

TEST(Journals, CsvIssnFallback) {
  std::istringstream in(
      "field,journal_full_name,tier,issn,eissn\n"
      "management,Example Journal,fair,1234-5678,8765-4321\n");
  const auto m = JournalTierMap::from_csv(in);
  EXPECT_EQ(m.tier_for("1234-5678", Field::kManagement), Tier::kFair);
  EXPECT_EQ(m.tier_for("8765-4321", Field::kManagement), Tier::kFair);
}

TEST(Journals, CsvRejectsDuplicates) {
  std::istringstream in(
      "field,journal_full_name,tier,issn,eissn\n"
      "management,Example Journal,fair,,\n"
      "management,example journal,strong,,\n");
  EXPECT_EQ(code_of([&] { JournalTierMap::from_csv(in); }), ErrorCode::kSchemaError);
}

TEST(Assets, PromptsShipVerbatim) {
  for (const char* p : {"expert", "simplified", "journal_anchored", "economics"}) {
    EXPECT_FALSE(prompt_text(p).empty()) << p;
  }
  EXPECT_THROW(prompt_text("missing"), Error);
}

}  // namespace
}  // namespace tierbench
