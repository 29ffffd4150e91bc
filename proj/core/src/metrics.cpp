#include "tierbench/metrics.hpp"

#include <cmath>

#include "tierbench/error.hpp"
#include "tierbench/io.hpp"

namespace tierbench {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_lengths(std::span<const Tier> preds, std::span<const Tier> truths) {
  if (preds.size() != truths.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(preds.size()) + " predictions for " +
                                                std::to_string(truths.size()) + " truths");
  }
}

}  // namespace

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < kNumTiers; ++i) t += counts[i][i];
  return t;
}

std::array<std::size_t, kNumTiers> ConfusionMatrix::predicted_counts() const {
  std::array<std::size_t, kNumTiers> out{};
  for (const auto& row : counts) {
    for (std::size_t p = 0; p < kNumTiers; ++p) out[p] += row[p];
  }
  return out;
}

std::array<std::size_t, kNumTiers> ConfusionMatrix::truth_counts() const {
  std::array<std::size_t, kNumTiers> out{};
  for (std::size_t t = 0; t < kNumTiers; ++t) {
    for (std::size_t c : counts[t]) out[t] += c;
  }
  return out;
}

std::array<std::array<double, kNumTiers>, kNumTiers> ConfusionMatrix::row_normalized() const {
  std::array<std::array<double, kNumTiers>, kNumTiers> out{};
  const auto rows = truth_counts();
  for (std::size_t t = 0; t < kNumTiers; ++t) {
    for (std::size_t p = 0; p < kNumTiers; ++p) out[t][p] = ratio(counts[t][p], rows[t]);
  }
  return out;
}

ConfusionMatrix confusion(std::span<const Tier> preds, std::span<const Tier> truths) {
  check_lengths(preds, truths);
  if (preds.empty()) throw Error(ErrorCode::kEmptyInput, "confusion matrix needs at least one item");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) ++cm.counts[index(truths[i])][index(preds[i])];
  cm.n = preds.size();
  return cm;
}

MetricsReport summarize(const ConfusionMatrix& cm, double chance) {
  if (cm.n == 0) throw Error(ErrorCode::kEmptyInput, "cannot summarize an empty confusion matrix");
  MetricsReport r;
  r.n = cm.n;
  r.chance = chance;
  r.accuracy = ratio(cm.trace(), cm.n);
  r.predicted_counts = cm.predicted_counts();
  const auto truth = cm.truth_counts();
  double f1_sum = 0.0;
  for (std::size_t t = 0; t < kNumTiers; ++t) {
    auto& s = r.per_tier[t];
    const std::size_t tp = cm.counts[t][t];
    s.support = truth[t];
    s.precision = ratio(tp, r.predicted_counts[t]);
    s.recall = ratio(tp, truth[t]);
    // F1 = 2TP / (2TP + FP + FN), which is 0 when both denominators vanish.
    s.f1 = ratio(2 * tp, r.predicted_counts[t] + truth[t]);
    f1_sum += s.f1;
  }
  r.macro_f1 = f1_sum / kNumTiers;
  r.above_chance_pp = (r.accuracy - chance) * 100.0;
  r.headroom = headroom(r.accuracy, chance);
  return r;
}

ConfidenceInterval accuracy_ci(const ConfusionMatrix& cm, CiMethod method, double level,
                               const BootstrapOptions& boot) {
  ConfidenceInterval ci;
  ci.method = method;
  ci.level = level;
  if (method != CiMethod::kBootstrap) {
    const Interval iv = proportion_ci(cm.trace(), cm.n, method, level);
    ci.low = iv.low;
    ci.high = iv.high;
    return ci;
  }
  std::vector<double> correct;
  correct.reserve(cm.n);
  for (std::size_t t = 0; t < kNumTiers; ++t) {
    for (std::size_t p = 0; p < kNumTiers; ++p) correct.insert(correct.end(), cm.counts[t][p], t == p ? 1.0 : 0.0);
  }
  BootstrapOptions opts = boot;
  opts.level = level;
  const Interval iv = bootstrap_ci(
      [](std::span<const double> s) {
        double sum = 0.0;
        for (double v : s) sum += v;
        return sum / static_cast<double>(s.size());
      },
      correct, opts);
  ci.low = iv.low;
  ci.high = iv.high;
  return ci;
}

double macro_f1(std::span<const Tier> preds, std::span<const Tier> truths) {
  return summarize(confusion(preds, truths)).macro_f1;
}

ConfidenceInterval macro_f1_bootstrap_ci(std::span<const Tier> preds, std::span<const Tier> truths,
                                         const BootstrapOptions& boot) {
  check_lengths(preds, truths);
  const Interval iv = bootstrap_ci_indices(
      preds.size(),
      [&](std::span<const std::size_t> idx) {
        ConfusionMatrix cm;
        for (std::size_t i : idx) ++cm.counts[index(truths[i])][index(preds[i])];
        cm.n = idx.size();
        return summarize(cm).macro_f1;
      },
      boot);
  return {iv.low, iv.high, CiMethod::kBootstrap, boot.level};
}

ErrorProfile error_profile(std::span<const Tier> preds, std::span<const Tier> truths) {
  check_lengths(preds, truths);
  ErrorProfile e;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int d = ordinal_distance(preds[i], truths[i]);
    if (d == 0) {
      ++e.exact;
      continue;
    }
    if (d == 1) {
      ++e.off_by_1;
    } else {
      ++e.off_by_2plus;
    }
    if (code(preds[i]) > code(truths[i])) {
      ++e.under;
    } else {
      ++e.over;
    }
  }
  return e;
}

double prediction_entropy(const std::array<std::size_t, kNumTiers>& predicted_counts) {
  std::size_t total = 0;
  for (std::size_t c : predicted_counts) total += c;
  if (total == 0) throw Error(ErrorCode::kEmptyCounts, "no predictions to measure");
  double h = 0.0;
  for (std::size_t c : predicted_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(kNumTiers));
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json j;
  j["labels"] = nlohmann::json::array();
  for (Tier t : kAllTiers) j["labels"].push_back(name(t));
  j["counts"] = cm.counts;
  j["row_normalized"] = cm.row_normalized();
  j["n"] = cm.n;
  return j;
}

namespace {

nlohmann::json ci_json(const ConfidenceInterval& ci) {
  return {{"low", ci.low}, {"high", ci.high}, {"method", ci_method_name(ci.method)}, {"level", ci.level}};
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["chance"] = r.chance;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  nlohmann::json per_tier = nlohmann::json::object();
  nlohmann::json predicted = nlohmann::json::object();
  for (Tier t : kAllTiers) {
    const auto& s = r.per_tier[index(t)];
    per_tier[std::string(name(t))] = {
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
    predicted[std::string(name(t))] = r.predicted_counts[index(t)];
  }
  j["per_tier"] = per_tier;
  j["predicted_counts"] = predicted;
  j["above_chance_pp"] = r.above_chance_pp;
  j["headroom"] = r.headroom;
  j["ci"] = r.ci ? ci_json(*r.ci) : nlohmann::json(nullptr);
  j["macro_f1_ci"] = r.macro_f1_ci ? ci_json(*r.macro_f1_ci) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const ErrorProfile& e) {
  return {{"exact", e.exact}, {"off_by_1", e.off_by_1}, {"off_by_2plus", e.off_by_2plus},
          {"under", e.under}, {"over", e.over}};
}

std::string metrics_csv_header() {
  std::vector<std::string> cols{"Model", "Model Key", "N", "Accuracy (%)", "Macro F1", "95% CI Lower (%)",
                                "95% CI Upper (%)", "Above Chance (pp)", "Headroom Skill (%)"};
  for (Tier t : kAllTiers) cols.push_back("Acc " + std::string(name(t)) + " (%)");
  for (Tier t : kAllTiers) cols.push_back("Pred " + std::string(name(t)) + " (n)");
  return io::csv_row(cols);
}

std::string metrics_csv_row(const std::string& model, const std::string& key, const MetricsReport& r,
                            const ConfusionMatrix& cm) {
  std::vector<std::string> row{model, key, std::to_string(r.n), format_percent(r.accuracy),
                               format_fixed(r.macro_f1, 3), r.ci ? format_percent(r.ci->low) : "",
                               r.ci ? format_percent(r.ci->high) : "", format_fixed(r.above_chance_pp, 1),
                               format_percent(r.headroom)};
  const auto rows = cm.row_normalized();
  for (std::size_t t = 0; t < kNumTiers; ++t) row.push_back(format_percent(rows[t][t]));
  for (std::size_t c : r.predicted_counts) row.push_back(std::to_string(c));
  return io::csv_row(row);
}

}  // namespace tierbench
