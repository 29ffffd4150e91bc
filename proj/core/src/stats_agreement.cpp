#include <algorithm>
#include <cmath>
#include <numeric>

#include "tierbench/error.hpp"
#include "tierbench/stats.hpp"

namespace tierbench {

FleissResult fleiss_kappa(const PitchRatings& ratings) {
  FleissResult out;
  std::array<double, kNumTiers> label_totals{};
  double rating_total = 0.0;
  double agreement_sum = 0.0;
  for (const auto& [pitch, labels] : ratings) {
    if (labels.size() < 2) {
      ++out.items_excluded;
      continue;
    }
    std::array<double, kNumTiers> counts{};
    for (Tier t : labels) ++counts[index(t)];
    const auto n = static_cast<double>(labels.size());
    double pairs = 0.0;
    for (std::size_t j = 0; j < kNumTiers; ++j) {
      pairs += counts[j] * (counts[j] - 1.0);
      label_totals[j] += counts[j];
    }
    agreement_sum += pairs / (n * (n - 1.0));
    rating_total += n;
    ++out.items_used;
  }
  if (out.items_used < 2) {
    throw Error(ErrorCode::kInsufficientRatings, "Fleiss kappa needs two or more items with at least two ratings");
  }
  const double p_bar = agreement_sum / static_cast<double>(out.items_used);
  double p_e = 0.0;
  for (double c : label_totals) p_e += (c / rating_total) * (c / rating_total);
  if (p_bar == 1.0) {
    // Unanimous on every item. Defined as full agreement even when a single
    // label was used throughout and chance agreement is also 1.
    out.kappa = 1.0;
    return out;
  }
  out.kappa = (p_bar - p_e) / (1.0 - p_e);
  return out;
}

double cohen_kappa(std::span<const Tier> a, std::span<const Tier> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kLengthMismatch, "label vectors differ in length");
  if (a.size() < 2) throw Error(ErrorCode::kInsufficientData, "Cohen kappa needs at least two items");
  std::array<std::size_t, kNumTiers> ca{}, cb{};
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[index(a[i])];
    ++cb[index(b[i])];
    agree += a[i] == b[i];
  }
  const auto n = static_cast<double>(a.size());
  std::array<double, kNumTiers> ma{}, mb{};
  std::size_t chance_pairs = 0;
  for (std::size_t j = 0; j < kNumTiers; ++j) {
    ma[j] = static_cast<double>(ca[j]) / n;
    mb[j] = static_cast<double>(cb[j]) / n;
    chance_pairs += ca[j] * cb[j];
  }
  if (chance_pairs == a.size() * a.size()) {
    throw Error(ErrorCode::kDegenerateMarginals, "both raters used one identical label; kappa is undefined");
  }
  return cohen_kappa_from_marginals(static_cast<double>(agree) / n, ma, mb);
}

double cohen_kappa_from_marginals(double observed, std::span<const double> marginals_a,
                                  std::span<const double> marginals_b) {
  if (marginals_a.size() != marginals_b.size()) throw Error(ErrorCode::kLengthMismatch, "marginal vectors differ");
  double p_e = 0.0;
  for (std::size_t j = 0; j < marginals_a.size(); ++j) p_e += marginals_a[j] * marginals_b[j];
  if (p_e >= 1.0) throw Error(ErrorCode::kDegenerateMarginals, "chance agreement is 1; kappa is undefined");
  return (observed - p_e) / (1.0 - p_e);
}

double krippendorff_alpha(const std::vector<std::vector<int>>& units, AlphaMetric metric) {
  std::vector<int> values;
  for (const auto& u : units) {
    if (u.size() >= 2) values.insert(values.end(), u.begin(), u.end());
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t v = values.size();
  auto idx = [&](int x) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), x) - values.begin());
  };

  // Coincidence matrix: each ordered pair of values within a unit adds 1/(m_u - 1).
  std::vector<double> o(v * v, 0.0);
  for (const auto& u : units) {
    const std::size_t m = u.size();
    if (m < 2) continue;
    std::vector<double> counts(v, 0.0);
    for (int x : u) counts[idx(x)] += 1.0;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t c = 0; c < v; ++c) {
      if (counts[c] == 0.0) continue;
      for (std::size_t k = 0; k < v; ++k) {
        const double pairs = c == k ? counts[c] * (counts[c] - 1.0) : counts[c] * counts[k];
        o[c * v + k] += pairs * w;
      }
    }
  }
  std::vector<double> nc(v, 0.0);
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) nc[c] += o[c * v + k];
  }
  const double n = std::accumulate(nc.begin(), nc.end(), 0.0);
  if (n < 2.0) throw Error(ErrorCode::kInsufficientRatings, "alpha needs at least two pairable values");

  auto delta2 = [&](std::size_t c, std::size_t k) -> double {
    if (c == k) return 0.0;
    const double a = values[c];
    const double b = values[k];
    switch (metric) {
      case AlphaMetric::kNominal:
        return 1.0;
      case AlphaMetric::kOrdinal: {
        const std::size_t lo = std::min(c, k), hi = std::max(c, k);
        double s = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) s += nc[g];
        s -= (nc[lo] + nc[hi]) / 2.0;
        return s * s;
      }
      case AlphaMetric::kInterval:
        return (a - b) * (a - b);
      case AlphaMetric::kRatio: {
        const double s = a + b;
        return s == 0.0 ? 0.0 : ((a - b) / s) * ((a - b) / s);
      }
    }
    return 1.0;
  };

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      const double d = delta2(c, k);
      observed += o[c * v + k] * d;
      expected += nc[c] * nc[k] * d;
    }
  }
  if (expected == 0.0) throw Error(ErrorCode::kNoVariation, "every pairable rating is identical; alpha is undefined");
  return 1.0 - (n - 1.0) * observed / expected;
}

double krippendorff_alpha_ordinal(const PitchRatings& ratings) {
  std::vector<std::vector<int>> units;
  units.reserve(ratings.size());
  for (const auto& [pitch, labels] : ratings) {
    std::vector<int> u;
    for (Tier t : labels) u.push_back(code(t));
    units.push_back(std::move(u));
  }
  return krippendorff_alpha(units, AlphaMetric::kOrdinal);
}

AgreementReport agreement_report(const RaterLabels& labels) {
  AgreementReport report;
  PitchRatings by_pitch;
  for (const auto& [rater, pitches] : labels) {
    for (const auto& [pitch, tier] : pitches) by_pitch[pitch].push_back(tier);
  }
  try {
    const auto f = fleiss_kappa(by_pitch);
    report.fleiss_kappa = f.kappa;
    report.fleiss_items_excluded = f.items_excluded;
  } catch (const Error& e) {
    report.notes.push_back(std::string("fleiss_kappa: ") + e.what());
  }
  try {
    report.krippendorff_alpha = krippendorff_alpha_ordinal(by_pitch);
  } catch (const Error& e) {
    report.notes.push_back(std::string("krippendorff_alpha: ") + e.what());
  }
  for (auto a = labels.begin(); a != labels.end(); ++a) {
    for (auto b = std::next(a); b != labels.end(); ++b) {
      std::vector<Tier> la, lb;
      double distance = 0.0;
      for (const auto& [pitch, tier] : a->second) {
        auto it = b->second.find(pitch);
        if (it == b->second.end()) continue;
        la.push_back(tier);
        lb.push_back(it->second);
        distance += ordinal_distance(tier, it->second);
      }
      const auto key = std::make_pair(a->first, b->first);
      if (!la.empty()) report.mean_ordinal_distance[key] = distance / static_cast<double>(la.size());
      try {
        report.pairwise_cohen[key] = cohen_kappa(la, lb);
      } catch (const Error& e) {
        report.notes.push_back("cohen_kappa(" + a->first + ", " + b->first + "): " + e.what());
      }
    }
  }
  return report;
}

nlohmann::json to_json(const AgreementReport& r) {
  using nlohmann::json;
  json j;
  j["fleiss_kappa"] = r.fleiss_kappa ? json(*r.fleiss_kappa) : json(nullptr);
  j["fleiss_items_excluded"] = r.fleiss_items_excluded;
  j["krippendorff_alpha"] = r.krippendorff_alpha ? json(*r.krippendorff_alpha) : json(nullptr);
  json cohen = json::array();
  for (const auto& [key, kappa] : r.pairwise_cohen) cohen.push_back({{"a", key.first}, {"b", key.second}, {"kappa", kappa}});
  j["pairwise_cohen"] = cohen;
  json dist = json::array();
  for (const auto& [key, d] : r.mean_ordinal_distance) {
    dist.push_back({{"a", key.first}, {"b", key.second}, {"mean_ordinal_distance", d}});
  }
  j["mean_ordinal_distance"] = dist;
  j["notes"] = r.notes;
  return j;
}

}  // namespace tierbench
