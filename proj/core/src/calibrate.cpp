#include "tierbench/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tierbench/error.hpp"
#include "tierbench/stats.hpp"

namespace tierbench {

namespace {

void check_pairs(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kLengthMismatch, std::to_string(a) + " values for " + std::to_string(b) + " flags");
  if (a == 0) throw Error(ErrorCode::kEmptyInput, "calibration needs at least one item");
}

void check_confidence(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::kInvalidConfidence, "confidence outside [0, 1]");
}

}  // namespace

double likert_to_confidence(int likert) {
  if (likert < 1 || likert > 5) throw Error(ErrorCode::kOutOfRangeLikert, "Likert value outside 1..5");
  return (likert - 1) / 4.0;
}

double confidence_of(const Prediction& pred) {
  return pred.distribution ? pred.distribution->max_probability() : pred.confidence;
}

double confidence_of(const PredictionRecord& record) {
  if (record.distribution) return record.distribution->max_probability();
  if (record.confidence) return *record.confidence;
  throw Error(ErrorCode::kMissingConfidence, "record for '" + record.pitch_id + "' carries no confidence");
}

double confidence_of(const RaterRecord& rating) { return likert_to_confidence(rating.confidence); }

std::size_t bin_index(double c, std::size_t n_bins) {
  if (n_bins == 0) throw Error(ErrorCode::kInvalidArgument, "n_bins must be positive");
  check_confidence(c);
  const auto n = static_cast<double>(n_bins);
  auto b = static_cast<std::size_t>(std::max(0.0, std::ceil(c * n) - 1.0));
  b = std::min(b, n_bins - 1);
  // Settle edge cases against the same edges the bins report.
  while (b > 0 && c <= static_cast<double>(b) / n) --b;
  while (b + 1 < n_bins && c > static_cast<double>(b + 1) / n) ++b;
  return b;
}

EceResult ece(std::span<const double> confidences, std::span<const bool> correct, std::size_t n_bins) {
  check_pairs(confidences.size(), correct.size());
  if (n_bins == 0) throw Error(ErrorCode::kInvalidArgument, "n_bins must be positive");
  EceResult out;
  out.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<std::size_t> hits(n_bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const std::size_t b = bin_index(confidences[i], n_bins);
    ++out.bins[b].count;
    conf_sum[b] += confidences[i];
    hits[b] += correct[i];
  }
  const auto total = static_cast<double>(confidences.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = out.bins[b];
    bin.low = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.high = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    if (bin.count == 0) continue;
    const auto count = static_cast<double>(bin.count);
    bin.mean_conf = conf_sum[b] / count;
    bin.accuracy = static_cast<double>(hits[b]) / count;
    out.ece += count / total * std::abs(bin.accuracy - bin.mean_conf);
  }
  return out;
}

double brier(std::span<const LabelDistribution> distributions, std::span<const Tier> truths) {
  check_pairs(distributions.size(), truths.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    double item = 0.0;
    for (Tier t : kAllTiers) {
      const double d = distributions[i][t] - (t == truths[i] ? 1.0 : 0.0);
      item += d * d;
    }
    sum += item;
  }
  return sum / static_cast<double>(distributions.size());
}

BrierDecomposition brier_decomposition(std::span<const LabelDistribution> distributions, std::span<const Tier> truths,
                                       std::size_t n_bins) {
  check_pairs(distributions.size(), truths.size());
  using Vec = std::array<double, kNumTiers>;
  const auto total = static_cast<double>(distributions.size());
  std::vector<std::vector<std::size_t>> members(n_bins);
  Vec base{};
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    members[bin_index(distributions[i].max_probability(), n_bins)].push_back(i);
    base[index(truths[i])] += 1.0 / total;
  }

  BrierDecomposition d;
  for (double o : base) d.uncertainty += o * (1.0 - o);
  double rel = 0.0, res = 0.0, wbv = 0.0, wbc = 0.0;
  for (const auto& bin : members) {
    if (bin.empty()) continue;
    const auto nb = static_cast<double>(bin.size());
    Vec p_bar{}, o_bar{};
    for (std::size_t i : bin) {
      for (std::size_t k = 0; k < kNumTiers; ++k) p_bar[k] += distributions[i].probabilities()[k] / nb;
      o_bar[index(truths[i])] += 1.0 / nb;
    }
    for (std::size_t k = 0; k < kNumTiers; ++k) {
      rel += nb * (p_bar[k] - o_bar[k]) * (p_bar[k] - o_bar[k]);
      res += nb * (o_bar[k] - base[k]) * (o_bar[k] - base[k]);
    }
    for (std::size_t i : bin) {
      for (std::size_t k = 0; k < kNumTiers; ++k) {
        const double dp = distributions[i].probabilities()[k] - p_bar[k];
        const double dobs = (index(truths[i]) == k ? 1.0 : 0.0) - o_bar[k];
        wbv += dp * dp;
        wbc += dp * dobs;
      }
    }
  }
  d.binned_reliability = rel / total;
  d.resolution = res / total;
  d.within_bin_variance = wbv / total;
  d.within_bin_covariance = 2.0 * wbc / total;
  d.reliability = d.binned_reliability + d.within_bin_variance - d.within_bin_covariance;
  return d;
}

ConfidenceGap confidence_gap(std::span<const double> confidences, std::span<const bool> correct) {
  check_pairs(confidences.size(), correct.size());
  std::vector<double> right, wrong;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    check_confidence(confidences[i]);
    (correct[i] ? right : wrong).push_back(confidences[i]);
  }
  if (right.empty() || wrong.empty()) {
    throw Error(ErrorCode::kDegenerateSplit, "confidence gap needs both correct and incorrect items");
  }
  ConfidenceGap g;
  g.n_correct = right.size();
  g.n_incorrect = wrong.size();
  g.gap = std::accumulate(right.begin(), right.end(), 0.0) / static_cast<double>(right.size()) -
          std::accumulate(wrong.begin(), wrong.end(), 0.0) / static_cast<double>(wrong.size());
  g.p_one_sided = mann_whitney(right, wrong, Sidedness::kGreater).p;
  return g;
}

SelectiveCurve selective_curve(std::span<const double> confidences, std::span<const bool> correct,
                               std::span<const std::string> ids) {
  check_pairs(confidences.size(), correct.size());
  std::vector<std::string> names;
  if (ids.empty()) {
    // Zero-padded so lexical order equals numeric order.
    const std::size_t width = std::to_string(confidences.size()).size();
    for (std::size_t i = 0; i < confidences.size(); ++i) {
      std::string s = std::to_string(i);
      names.push_back(std::string(width - s.size(), '0') + s);
    }
  } else {
    if (ids.size() != confidences.size()) throw Error(ErrorCode::kLengthMismatch, "ids and confidences differ");
    names.assign(ids.begin(), ids.end());
  }
  std::vector<std::size_t> order(confidences.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (confidences[a] != confidences[b]) return confidences[a] > confidences[b];
    return names[a] < names[b];
  });
  SelectiveCurve curve;
  const auto n = static_cast<double>(order.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    hits += correct[order[k]];
    curve.points.push_back({static_cast<double>(k + 1) / n, static_cast<double>(hits) / static_cast<double>(k + 1)});
    curve.order.push_back(names[order[k]]);
  }
  return curve;
}

CalibrationReport calibration_report(std::span<const double> confidences, std::span<const bool> correct,
                                     std::span<const LabelDistribution> distributions, std::span<const Tier> truths,
                                     std::size_t n_bins) {
  CalibrationReport r;
  const EceResult e = ece(confidences, correct, n_bins);
  r.n = confidences.size();
  r.n_bins = n_bins;
  r.ece = e.ece;
  r.bins = e.bins;
  if (!distributions.empty()) {
    r.brier = brier(distributions, truths);
    r.brier_decomposition = brier_decomposition(distributions, truths, n_bins);
  }
  try {
    const ConfidenceGap g = confidence_gap(confidences, correct);
    r.confidence_gap = g.gap;
    r.gap_p_one_sided = g.p_one_sided;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kDegenerateSplit) throw;
    r.notes.push_back(err.what());
  }
  return r;
}

nlohmann::json to_json(const CalibrationReport& r) {
  using nlohmann::json;
  json j;
  j["n"] = r.n;
  j["n_bins"] = r.n_bins;
  j["ece"] = r.ece;
  j["brier"] = r.brier ? json(*r.brier) : json(nullptr);
  if (r.brier_decomposition) {
    const auto& d = *r.brier_decomposition;
    j["brier_decomposition"] = {{"reliability", d.reliability},
                                {"resolution", d.resolution},
                                {"uncertainty", d.uncertainty},
                                {"binned_reliability", d.binned_reliability},
                                {"within_bin_variance", d.within_bin_variance},
                                {"within_bin_covariance", d.within_bin_covariance}};
  } else {
    j["brier_decomposition"] = nullptr;
  }
  j["confidence_gap"] = r.confidence_gap ? json(*r.confidence_gap) : json(nullptr);
  j["gap_p_one_sided"] = r.gap_p_one_sided ? json(*r.gap_p_one_sided) : json(nullptr);
  json bins = json::array();
  for (const auto& b : r.bins) {
    bins.push_back({{"low", b.low}, {"high", b.high}, {"count", b.count}, {"mean_conf", b.mean_conf},
                    {"accuracy", b.accuracy}});
  }
  j["bins"] = bins;
  j["notes"] = r.notes;
  return j;
}

nlohmann::json to_json(const SelectiveCurve& c) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : c.points) points.push_back({{"coverage", p.coverage}, {"accuracy", p.accuracy}});
  return {{"points", points}, {"order", c.order}};
}

}  // namespace tierbench
