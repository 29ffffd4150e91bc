#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <mutex>
#include <thread>

#include "tierbench/aggregate.hpp"
#include "tierbench/error.hpp"
#include "tierbench/random.hpp"
#include "tierbench/stats.hpp"

namespace tierbench {

namespace {

// Runs body(d) for d in [0, count) over `threads` workers. Each d writes only
// its own output slot, so results match the serial loop exactly.
template <class Body>
void parallel_draws(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t d = 0; d < count; ++d) body(d);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t d = t; d < count; d += threads) body(d);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

Interval percentile_interval(std::vector<double> values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::kInvalidArgument, "confidence level must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail)};
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptyInput, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> bootstrap_replicates(std::size_t n,
                                         const std::function<double(std::span<const std::size_t>)>& statistic,
                                         const BootstrapOptions& opts) {
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "bootstrap needs a non-empty sample");
  if (opts.draws == 0) throw Error(ErrorCode::kInvalidArgument, "bootstrap needs draws >= 1");
  std::vector<double> replicates(opts.draws);
  parallel_draws(opts.draws, opts.threads, [&](std::size_t d) {
    Rng rng = Rng::substream(opts.seed, d);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.uniform_index(n);
    replicates[d] = statistic(idx);
  });
  return replicates;
}

Interval bootstrap_ci_indices(std::size_t n, const std::function<double(std::span<const std::size_t>)>& statistic,
                              const BootstrapOptions& opts) {
  return percentile_interval(bootstrap_replicates(n, statistic, opts), opts.level);
}

Interval bootstrap_ci(const std::function<double(std::span<const double>)>& statistic, std::span<const double> data,
                      const BootstrapOptions& opts) {
  return bootstrap_ci_indices(
      data.size(),
      [&](std::span<const std::size_t> idx) {
        std::vector<double> sample(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) sample[i] = data[idx[i]];
        return statistic(sample);
      },
      opts);
}

SubsampleReport matched_n_subsample(const PanelRatings& ratings, const std::map<std::string, Tier, std::less<>>& truths,
                                    double target_raters_per_pitch, std::size_t draws, std::uint64_t seed, double level,
                                    unsigned threads) {
  if (draws == 0) throw Error(ErrorCode::kInvalidArgument, "subsampling needs draws >= 1");
  const double rounded = std::round(target_raters_per_pitch);
  if (!(rounded >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "target raters per pitch must round to 1 or more");
  const auto target = static_cast<std::size_t>(rounded);

  struct PitchPanel {
    Tier truth;
    std::vector<Tier> labels;
  };
  std::vector<PitchPanel> panels;
  for (const auto& [pitch, rows] : ratings) {
    if (rows.empty()) throw Error(ErrorCode::kEmptyPitch, "pitch '" + pitch + "' has no ratings");
    const auto truth = truths.find(pitch);
    if (truth == truths.end()) throw Error(ErrorCode::kInvalidArgument, "no truth for pitch '" + pitch + "'");
    PitchPanel p{truth->second, {}};
    // Raters in id order so the draw does not depend on file order.
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [rater, tier] : sorted) p.labels.push_back(tier);
    panels.push_back(std::move(p));
  }
  if (panels.empty()) throw Error(ErrorCode::kEmptyInput, "no pitches to subsample");

  SubsampleReport report;
  report.draws = draws;
  report.per_draw_accuracy.assign(draws, std::numeric_limits<double>::quiet_NaN());
  report.per_draw_effective_n.assign(draws, 0);
  parallel_draws(draws, threads, [&](std::size_t d) {
    Rng rng = Rng::substream(seed, d);
    std::size_t effective = 0, correct = 0;
    std::vector<Tier> pool;
    for (const auto& p : panels) {
      pool = p.labels;
      const std::size_t m = std::min(pool.size(), target);
      rng.partial_shuffle(std::span(pool), m);
      const auto vote = majority_vote(std::span<const Tier>(pool.data(), m));
      if (!vote) continue;
      ++effective;
      correct += *vote == p.truth;
    }
    report.per_draw_effective_n[d] = effective;
    if (effective > 0) report.per_draw_accuracy[d] = static_cast<double>(correct) / static_cast<double>(effective);
  });

  std::vector<double> valid;
  double eff_sum = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    eff_sum += static_cast<double>(report.per_draw_effective_n[d]);
    if (report.per_draw_effective_n[d] == 0) {
      ++report.empty_draws;
    } else {
      valid.push_back(report.per_draw_accuracy[d]);
    }
  }
  report.mean_effective_n = eff_sum / static_cast<double>(draws);
  if (!valid.empty()) {
    report.mean_accuracy = std::accumulate(valid.begin(), valid.end(), 0.0) / static_cast<double>(valid.size());
    report.ci = percentile_interval(valid, level);
  }
  return report;
}

nlohmann::json to_json(const SubsampleReport& r, bool include_draws) {
  nlohmann::json j;
  j["draws"] = r.draws;
  j["mean_accuracy"] = r.mean_accuracy;
  j["ci"] = {r.ci.low, r.ci.high};
  j["mean_effective_n"] = r.mean_effective_n;
  j["empty_draws"] = r.empty_draws;
  if (include_draws) {
    nlohmann::json acc = nlohmann::json::array();
    for (double a : r.per_draw_accuracy) acc.push_back(std::isnan(a) ? nlohmann::json(nullptr) : nlohmann::json(a));
    j["per_draw_accuracy"] = acc;
    j["per_draw_effective_n"] = r.per_draw_effective_n;
  }
  return j;
}

}  // namespace tierbench
