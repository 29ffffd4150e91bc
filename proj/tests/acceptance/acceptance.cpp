// Acceptance harness: one line per criterion, nonzero exit when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "reference_values.hpp"
#include "tierbench/calibrate.hpp"
#include "tierbench/classify.hpp"
#include "tierbench/collect.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"
#include "tierbench/metrics.hpp"
#include "tierbench/pairwise.hpp"
#include "tierbench/random.hpp"
#include "tierbench/rlsim.hpp"
#include "tierbench/stats.hpp"

namespace tb = tierbench;
using tb::Tier;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; the first failure message leads the detail line.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(Outcome&)> body;
};

std::string fmt(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::unique_ptr<bool[]> flags(const std::vector<int>& v) {
  auto out = std::make_unique<bool[]>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] != 0;
  return out;
}

void ed_fixture(Outcome& o) {
  const auto bench = tb::fixtures::bench_120();
  const auto preds = tb::fixtures::confusion_fixture();
  const auto truths = bench.truths();
  std::vector<Tier> p, t;
  for (const auto& r : preds.records) {
    p.push_back(*r.label);
    t.push_back(truths.at(r.pitch_id));
  }
  const auto cm = tb::confusion(p, t);
  const auto rep = tb::summarize(cm);
  const auto acc = tb::format_percent(rep.accuracy, 3);
  o.detail << "accuracy=" << acc << "% macro_f1=" << fmt(rep.macro_f1, 4) << " predicted=(" << rep.predicted_counts[0]
           << "," << rep.predicted_counts[1] << "," << rep.predicted_counts[2] << "," << rep.predicted_counts[3] << ")";
  o.check(acc == "32.500", "accuracy");
  o.check(std::abs(rep.macro_f1 - 0.268) <= 0.001, "macro_f1");
  o.check(rep.predicted_counts == std::array<std::size_t, 4>{14, 49, 57, 0}, "predicted counts");
  o.check(cm.at(Tier::kExceptional, Tier::kExceptional) == 6 && cm.at(Tier::kStrong, Tier::kStrong) == 18 &&
              cm.at(Tier::kFair, Tier::kFair) == 15 && cm.at(Tier::kLimited, Tier::kLimited) == 0,
          "diagonal");
}

void headroom_triple(Outcome& o) {
  const struct {
    double acc, expected_pp;
  } cases[] = {{0.608, 47.8}, {0.311, 8.1}, {0.416, 22.1}};
  for (const auto& c : cases) {
    const double h = 100.0 * tb::headroom(c.acc, 0.25);
    const double diff = std::abs(h - c.expected_pp);
    o.detail << fmt(c.acc, 3) << "->" << fmt(h, 3) << "% (want " << fmt(c.expected_pp, 1) << ", |d|=" << fmt(diff, 3)
             << ") ";
    o.check(diff <= 0.05 + 1e-12, "headroom at " + fmt(c.acc, 3));
  }
}

void cohen_marginals(Outcome& o) {
  const std::vector<double> a = {0.300, 0.200, 0.317, 0.183};
  const std::vector<double> b = {0.342, 0.225, 0.258, 0.175};
  double pe = 0;
  for (std::size_t i = 0; i < 4; ++i) pe += a[i] * b[i];
  const double kappa = tb::cohen_kappa_from_marginals(0.708, a, b);
  o.detail << "p_e=" << fmt(pe, 4) << " kappa=" << fmt(kappa, 4);
  o.check(std::abs(pe - 0.2614) < 5e-5, "chance agreement");
  o.check(std::abs(kappa - 0.605) <= 0.002, "kappa");
}

void mcnemar_reconstruction(Outcome& o) {
  const struct {
    std::size_t b, c;
    double stat, p_ref;
  } cases[] = {{38, 14, 10.173, tb::reference::kChi2Sf_10_173}, {32, 13, 7.200, tb::reference::kChi2Sf_7_2}};
  for (const auto& c : cases) {
    const auto r = tb::mcnemar_counts(c.b, c.c, tb::McNemarMode::kContinuityCorrected);
    o.detail << "(" << c.b << "," << c.c << ") stat=" << fmt(*r.statistic, 4) << " p=" << fmt(r.p, 6) << " ";
    o.check(std::abs(*r.statistic - c.stat) <= 0.001, "statistic");
    o.check(std::abs(r.p - c.p_ref) <= 1e-12, "p vs chi-square reference");
  }
  o.check(std::abs(tb::mcnemar_counts(38, 14, tb::McNemarMode::kContinuityCorrected).p - 0.001425) <= 5e-5,
          "p first case");
  o.check(std::abs(tb::mcnemar_counts(32, 13, tb::McNemarMode::kContinuityCorrected).p - 0.00729) <= 5e-5,
          "p second case");
}

void grpo_gradient(Outcome& o) {
  const int configs = 120;
  double worst = 0;
  int clipped = 0;
  std::set<int> groups, tokens;
  for (int s = 0; s < configs; ++s) {
    const auto r = tb::oracle::grpo_gradient_check(1000 + static_cast<std::uint64_t>(s));
    worst = std::max(worst, r.relative_error);
    clipped += r.any_clipped;
    groups.insert(r.group_size);
    tokens.insert(r.max_tokens);
  }
  o.detail << configs << " configs, max rel err=" << worst << ", " << clipped << " with clipped tokens, G in ["
           << *groups.begin() << "," << *groups.rbegin() << "], tokens in [" << *tokens.begin() << ","
           << *tokens.rbegin() << "]";
  o.check(worst < 1e-4, "relative error");
  o.check(clipped > 0, "clip branch exercised");
}

void advantage_vanishing(Outcome& o) {
  double worst = 0;
  tb::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t g = 2 + rng.uniform_index(15);
    tb::rl::ToyPolicy policy(1 + static_cast<int>(rng.uniform_index(4)), 2.0);
    for (int pos = 0; pos < policy.max_tokens(); ++pos) {
      tb::rl::ToyPolicy::Logits l;
      for (auto& x : l) x = rng.normal();
      policy.set_logits(0, pos, l);
    }
    const auto group = tb::rl::toy_rollout(policy, {"q", 0, tb::tier_at(rng.uniform_index(4))}, g, 7 + trial);
    const double r = std::vector<double>{0.0, 0.3, 1.0}[rng.uniform_index(3)];
    const std::vector<double> rewards(g, r);
    const auto adv = tb::rl::normalize_advantages(rewards);
    for (double a : adv) worst = std::max(worst, std::abs(a));
    tb::rl::ToyPolicy moved = policy;
    for (auto& [key, l] : moved.table()) {
      auto& m = moved.mutable_logits(key.first, key.second);
      for (auto& x : m) x += 0.3 * rng.normal();
    }
    for (const auto& [key, v] : tb::rl::grpo_gradient_toy(moved, group, adv, tb::rl::ClipParams{})) {
      for (double x : v) worst = std::max(worst, std::abs(x));
    }
    worst = std::max(worst, std::abs(tb::rl::grpo_loss_toy(moved, group, adv, tb::rl::ClipParams{}).loss));
  }
  o.detail << "50 identical-reward groups, max |advantage, gradient, loss|=" << worst;
  o.check(worst < 1e-12, "vanishing");
}

void reward_exhaustion(Outcome& o) {
  std::size_t n = 0, gated = 0, exact = 0, adjacent = 0, far = 0;
  for (Tier label : tb::kAllTiers) {
    for (Tier reasoning : tb::kAllTiers) {
      for (Tier truth : tb::kAllTiers) {
        const double r = tb::rl::reward(label, reasoning, truth);
        ++n;
        double want;
        const int d = std::abs(tb::code(label) - tb::code(truth));
        if (label != reasoning) {
          want = 0.0;
          ++gated;
        } else if (d == 0) {
          want = 1.0;
          ++exact;
        } else if (d == 1) {
          want = 0.3;
          ++adjacent;
        } else {
          want = 0.0;
          ++far;
        }
        o.check(r == want && (r == 0.0 || r == 0.3 || r == 1.0), "triple " + std::string(tb::name(label)) + "/" +
                                                                       std::string(tb::name(reasoning)) + "/" +
                                                                       std::string(tb::name(truth)));
      }
    }
  }
  o.detail << n << " triples: gated=" << gated << " exact=" << exact << " adjacent=" << adjacent << " far=" << far;
  o.check(n == 64 && gated == 48 && exact == 4 && adjacent == 6 && far == 6, "case counts");
}

void pairwise_strata(Outcome& o) {
  const auto bench = tb::fixtures::bench_120();
  const auto a = tb::serialize_pairs(tb::build_pairs(bench, 7));
  const auto b = tb::serialize_pairs(tb::build_pairs(bench, 7));
  const auto set = tb::build_pairs(bench, 7);
  std::map<int, std::size_t> by_d;
  for (const auto& p : set.pairs) ++by_d[p.distance];
  const auto digest = tb::io::sha256_hex(a);
  const auto golden = tb::io::read_file(tb::fixtures::path("pairs_seed7.sha256"));
  o.detail << "strata=(" << by_d[1] << "," << by_d[2] << "," << by_d[3] << ") sha256=" << digest.substr(0, 16) << "...";
  o.check(by_d == std::map<int, std::size_t>{{1, 150}, {2, 100}, {3, 50}}, "strata");
  o.check(a == b, "byte-identical reruns");
  o.check(golden.substr(0, 64) == digest, "golden digest");

  const auto score = tb::score_pairs(tb::fixtures::choices_with(set, {{1, 118}, {2, 90}, {3, 45}}), set);
  const auto overall = tb::format_percent(score.overall.accuracy(), 2);
  const auto d1 = tb::format_percent(score.per_distance.at(1).accuracy(), 2);
  o.detail << " overall=" << score.overall.correct << "/" << score.overall.total << "=" << overall << "% d1=" << d1
           << "%";
  o.check(score.overall.correct == 253 && score.overall.total == 300 && overall == "84.33", "overall score");
  o.check(d1 == "78.67", "distance-1 score");
}

void calibration_suite(Outcome& o) {
  const std::vector<tb::LabelDistribution> uniform(12, tb::LabelDistribution::uniform());
  std::vector<Tier> truths;
  for (int i = 0; i < 12; ++i) truths.push_back(tb::tier_at(static_cast<std::size_t>(i % 4)));
  const double b = tb::brier(uniform, truths);
  o.check(b == 0.75, "uniform Brier");

  const std::vector<double> conf(10, 0.85);
  const auto hits = flags({1, 1, 1, 1, 1, 1, 1, 1, 0, 0});
  const double single = tb::ece(conf, std::span<const bool>(hits.get(), 10)).ece;
  o.check(std::abs(single - 0.05) <= 1e-12, "single-bin ECE");

  tb::Rng rng(99);
  std::vector<double> gen_conf;
  std::vector<int> gen_hits;
  for (int i = 0; i < 10000; ++i) {
    const double c = 0.25 + 0.75 * rng.uniform01();
    gen_conf.push_back(c);
    gen_hits.push_back(rng.bernoulli(c));
  }
  const auto gh = flags(gen_hits);
  const double gen_ece = tb::ece(gen_conf, std::span<const bool>(gh.get(), gen_hits.size())).ece;
  o.check(gen_ece < 0.02, "calibrated generator ECE");

  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(300);
    std::vector<tb::LabelDistribution> d;
    std::vector<Tier> t;
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 4> w{};
      double s = 0;
      for (auto& x : w) s += (x = rng.uniform01() + 1e-3);
      for (auto& x : w) x /= s;
      w[3] = 1.0 - w[0] - w[1] - w[2];
      d.push_back(tb::LabelDistribution::from_probabilities(w));
      t.push_back(tb::tier_at(rng.uniform_index(4)));
    }
    const auto dec = tb::brier_decomposition(d, t, 1 + rng.uniform_index(20));
    worst = std::max(worst, std::abs(dec.reliability - dec.resolution + dec.uncertainty - tb::brier(d, t)));
  }
  o.check(worst <= 1e-9, "decomposition identity");
  o.detail << "uniform Brier=" << b << " single-bin ECE=" << single << " generator ECE=" << fmt(gen_ece, 4)
           << " max identity residual=" << worst << " (200 inputs)";
}

void agreement_suite(Outcome& o) {
  const tb::PitchRatings perfect = {{"a", {Tier::kFair, Tier::kFair, Tier::kFair}},
                                    {"b", {Tier::kStrong, Tier::kStrong, Tier::kStrong}},
                                    {"c", {Tier::kLimited, Tier::kLimited, Tier::kLimited}}};
  const tb::PitchRatings split = {{"a", {Tier::kExceptional, Tier::kStrong}}, {"b", {Tier::kExceptional, Tier::kStrong}}};
  const double k1 = tb::fleiss_kappa(perfect).kappa;
  const double k2 = tb::fleiss_kappa(split).kappa;
  o.check(k1 == 1.0, "perfect agreement");
  o.check(std::abs(k2 + 1.0) < 1e-15, "split fixture");

  // Four observers, twelve units, 0 = missing.
  const int obs[4][12] = {{1, 2, 3, 3, 2, 1, 4, 1, 2, 0, 0, 0},
                          {1, 2, 3, 3, 2, 2, 4, 1, 2, 5, 0, 3},
                          {0, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, 0},
                          {1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, 0}};
  std::vector<std::vector<int>> units(12);
  for (int u = 0; u < 12; ++u) {
    for (const auto& row : obs) {
      if (row[u] != 0) units[u].push_back(row[u]);
    }
  }
  const double ord = tb::krippendorff_alpha(units, tb::AlphaMetric::kOrdinal);
  o.check(std::abs(ord - tb::reference::kAlphaOrdinal) <= 1e-6, "ordinal alpha reference");

  tb::Rng rng(31337);
  int checked = 0;
  double worst = 0;
  while (checked < 50) {
    const std::size_t items = 2 + rng.uniform_index(7);
    const std::size_t raters = 2 + rng.uniform_index(4);
    tb::PitchRatings pr;
    std::vector<std::vector<int>> us;
    std::vector<std::vector<Tier>> by_rater(raters);
    for (std::size_t i = 0; i < items; ++i) {
      std::vector<Tier> labels;
      std::vector<int> codes;
      for (std::size_t r = 0; r < raters; ++r) {
        const Tier t = tb::tier_at(rng.uniform_index(4));
        by_rater[r].push_back(t);
        labels.push_back(t);
        codes.push_back(tb::code(t));
      }
      if (rng.bernoulli(0.3)) codes.pop_back();
      us.push_back(codes);
      pr["i" + std::to_string(i)] = labels;
    }
    try {
      const double f = tb::fleiss_kappa(pr).kappa;
      const double c = tb::cohen_kappa(by_rater[0], by_rater[1]);
      const double a = tb::krippendorff_alpha(us, tb::AlphaMetric::kOrdinal);
      worst = std::max({worst, std::abs(f - tb::oracle::fleiss_kappa(pr)),
                        std::abs(c - tb::oracle::cohen_kappa(by_rater[0], by_rater[1])),
                        std::abs(a - tb::oracle::krippendorff_alpha(us, tb::oracle::Metric::kOrdinal))});
      ++checked;
    } catch (const tb::Error&) {
      // Undefined coefficient (no variation); draw another instance.
    }
  }
  o.check(worst <= 1e-9, "brute-force match");
  o.detail << "fleiss perfect=" << k1 << " split=" << k2 << " ordinal alpha=" << fmt(ord, 10) << " (ref "
           << fmt(tb::reference::kAlphaOrdinal, 10) << ") max brute-force diff=" << worst << " over " << checked;
}

tb::PanelRatings three_pitch_panel() {
  return {
      {"p1", {{"r1", Tier::kFair}, {"r2", Tier::kFair}, {"r3", Tier::kStrong}, {"r4", Tier::kLimited}, {"r5", Tier::kFair}}},
      {"p2", {{"r1", Tier::kStrong}, {"r2", Tier::kFair}, {"r3", Tier::kStrong}, {"r4", Tier::kExceptional}}},
      {"p3", {{"r1", Tier::kLimited}, {"r2", Tier::kFair}, {"r3", Tier::kLimited}}},
  };
}

void resampling(Outcome& o) {
  std::vector<double> data;
  tb::Rng rng(8);
  for (int i = 0; i < 300; ++i) data.push_back(rng.normal());
  auto mean = [](std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
  };
  tb::BootstrapOptions opt;
  opt.draws = 10000;
  opt.seed = 2026;
  const auto b1 = tb::bootstrap_ci(mean, data, opt);
  const auto b2 = tb::bootstrap_ci(mean, data, opt);
  opt.threads = 4;
  const auto b3 = tb::bootstrap_ci(mean, data, opt);
  o.check(b1 == b2 && b1 == b3, "bootstrap bit-identical");

  const auto panel = three_pitch_panel();
  const std::map<std::string, Tier, std::less<>> truths = {
      {"p1", Tier::kFair}, {"p2", Tier::kStrong}, {"p3", Tier::kLimited}};
  const std::size_t draws = 5000;
  const auto s1 = tb::matched_n_subsample(panel, truths, 3, draws, 404);
  const auto s2 = tb::matched_n_subsample(panel, truths, 3, draws, 404);
  const auto s3 = tb::matched_n_subsample(panel, truths, 3, draws, 404, 0.95, 4);
  o.check(s1.per_draw_accuracy == s2.per_draw_accuracy && s1.per_draw_effective_n == s2.per_draw_effective_n &&
              s1.per_draw_accuracy == s3.per_draw_accuracy && s1.ci == s3.ci,
          "subsample bit-identical");

  // Every sampled outcome must lie in the enumerated support, and outcome
  // frequencies must sit within 5 sigma of the exact probabilities.
  const auto exact = tb::oracle::subsample_outcomes(panel, truths, 3);
  std::map<tb::oracle::Outcome, std::size_t> seen;
  for (std::size_t d = 0; d < draws; ++d) {
    const std::size_t eff = s1.per_draw_effective_n[d];
    const auto correct =
        eff == 0 ? std::size_t{0}
                 : static_cast<std::size_t>(std::llround(s1.per_draw_accuracy[d] * static_cast<double>(eff)));
    ++seen[{correct, eff}];
  }
  bool in_support = true;
  for (const auto& [k, n] : seen) in_support = in_support && exact.count(k) > 0;
  double worst_z = 0;
  for (const auto& [k, p] : exact) {
    const double sigma = std::sqrt(static_cast<double>(draws) * p * (1 - p));
    const double dev = std::abs(static_cast<double>(seen[k]) - p * static_cast<double>(draws));
    worst_z = std::max(worst_z, sigma > 0 ? dev / sigma : dev);
  }
  o.check(in_support, "support");
  o.check(worst_z < 5.0, "frequencies");

  const auto full = tb::matched_n_subsample(panel, truths, 10, 200, 5);
  const auto full_exact = tb::oracle::subsample_outcomes(panel, truths, 10);
  bool full_ok = full_exact.size() == 1;
  if (full_ok) {
    const auto [c, eff] = full_exact.begin()->first;
    for (std::size_t d = 0; d < 200; ++d) {
      full_ok = full_ok && full.per_draw_effective_n[d] == eff &&
                full.per_draw_accuracy[d] == static_cast<double>(c) / static_cast<double>(eff);
    }
  }
  o.check(full_ok, "full panel exact");
  o.detail << "bootstrap [" << fmt(b1.low) << "," << fmt(b1.high) << "] x3 identical; subsample " << draws
           << " draws identical, " << exact.size() << " exact outcomes, max |z|=" << fmt(worst_z, 2)
           << ", full-panel draws exact";
}

void collection_protocol(Outcome& o) {
  using namespace std::chrono_literals;
  namespace c = tb::collect;
  c::EndpointConfig e;
  e.base_url = "http://mock.invalid";
  e.model_name = "mock-model";
  e.auth_env_var = "";
  e.max_concurrent = 2;
  e.requests_per_minute = 12000;
  e.backoff_base_seconds = 0.001;
  e.backoff_max_seconds = 0.004;
  const auto bench = tb::fixtures::synthetic_bench(3);
  const std::size_t n = bench.pitches.size();
  const auto spacing = std::chrono::nanoseconds(60'000'000'000LL / static_cast<long long>(e.requests_per_minute));

  auto limits_ok = [&](const c::MockTransport& m) {
    auto calls = m.calls();
    std::sort(calls.begin(), calls.end(), [](const auto& a, const auto& b) { return a.issued_at < b.issued_at; });
    bool ok = m.max_in_flight() <= e.max_concurrent;
    for (std::size_t i = 1; i < calls.size(); ++i) ok = ok && calls[i].issued_at - calls[i - 1].issued_at >= spacing;
    for (const auto& call : calls) ok = ok && call.in_flight <= e.max_concurrent;
    return ok;
  };

  auto lp = std::make_shared<c::MockTransport>(
      [](const c::HttpRequest&, std::size_t) {
        return c::HttpResponse{200, c::logprob_response_body({{"Fair", -0.4}, {" str", -1.3}, {"lim", -2.2}})};
      },
      12ms);
  c::Client lp_client(e, lp, std::make_shared<c::Cache>(tb::fixtures::temp_dir("accept-lp")), 1);
  c::CollectOptions lp_opt;
  lp_client.fetch_logprobs("warm", "up");  // not part of the benchmark run
  lp->reset_log();
  const auto r1 = c::collect_benchmark(lp_client, bench, lp_opt);
  const std::size_t lp_first = lp->call_count();
  const bool lp_limits = limits_ok(*lp);
  const std::size_t lp_peak = lp->max_in_flight();
  lp->reset_log();
  c::collect_benchmark(lp_client, bench, lp_opt);
  const std::size_t lp_rerun = lp->call_count();
  o.check(lp_first == n && r1.failures.empty(), "logprob one request per pitch");
  o.check(lp_rerun == 0, "logprob rerun");

  auto sm = std::make_shared<c::MockTransport>(
      [](const c::HttpRequest&, std::size_t i) {
        return c::HttpResponse{200, c::completion_response_body(i % 3 ? "Fair" : "**Strong**")};
      },
      12ms);
  c::Client sm_client(e, sm, std::make_shared<c::Cache>(tb::fixtures::temp_dir("accept-sm")), 1);
  c::CollectOptions sm_opt;
  sm_opt.mode = c::CollectMode::kSampled;
  const auto r2 = c::collect_benchmark(sm_client, bench, sm_opt);
  const std::size_t sm_first = sm->call_count();
  const bool sm_limits = limits_ok(*sm);
  const std::size_t sm_peak = sm->max_in_flight();
  sm->reset_log();
  c::collect_benchmark(sm_client, bench, sm_opt);
  const std::size_t sm_rerun = sm->call_count();
  o.check(sm_first == 8 * n && r2.failures.empty(), "sampled eight requests per pitch");
  o.check(sm_rerun == 0, "sampled rerun");
  o.check(lp_limits && sm_limits, "rate and concurrency limits");
  o.check(std::max(lp_peak, sm_peak) == e.max_concurrent, "concurrency cap reached");

  const auto m = c::match_label_tokens(
      {{"Str", -0.5}, {" strong", -0.2}, {"F", -1.0}, {"fai", -1.5}, {"EX", -2.0}, {"the", -0.1}, {"", -0.3}});
  const bool prefix_ok = m[tb::index(Tier::kStrong)] == -0.2 && m[tb::index(Tier::kFair)] == -1.0 &&
                         m[tb::index(Tier::kExceptional)] == -2.0 && !m[tb::index(Tier::kLimited)];
  bool nothing_throws = false;
  try {
    c::match_label_tokens({{"maybe", -0.1}});
  } catch (const tb::Error& err) {
    nothing_throws = err.code() == tb::ErrorCode::kNoLabelTokens;
  }
  o.check(prefix_ok && nothing_throws, "prefix matching");
  o.detail << n << " pitches: logprob " << lp_first << " then " << lp_rerun << " requests; sampled " << sm_first
           << " then " << sm_rerun << "; peak in flight " << std::max(lp_peak, sm_peak)
           << "/" << e.max_concurrent << "; prefix rule ok=" << prefix_ok;
}

void classification_protocol(Outcome& o) {
  tb::Rng rng(123);
  const double inf = std::numeric_limits<double>::infinity();
  int maps = 0, label_mismatch = 0, tie_mismatch = 0, shift_mismatch = 0, missing_mass = 0, ties = 0;
  long double worst_p = 0;
  while (maps < 1000) {
    tb::LabelLogprobs lp;
    bool any = false;
    for (auto& v : lp) {
      const double u = rng.uniform01();
      if (u < 0.2) {
        v = std::nullopt;
      } else if (u < 0.25) {
        v = -inf;
      } else {
        // Coarse grid so exact ties occur regularly.
        v = u < 0.6 ? -0.5 * static_cast<double>(rng.uniform_index(6)) : -8.0 * rng.uniform01();
        any = true;
      }
    }
    if (!any) continue;
    ++maps;
    const auto pred = tb::classify_logprob(lp);
    const auto ref = tb::oracle::softmax_argmax(lp);
    label_mismatch += pred.label != ref.label;
    tie_mismatch += pred.tie_broken != ref.tie;
    ties += ref.tie;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& p = pred.distribution->probabilities();
      worst_p = std::max(worst_p, std::abs(static_cast<long double>(p[i]) - ref.p[i]));
      if ((!lp[i] || std::isinf(*lp[i])) && p[i] != 0.0) ++missing_mass;
    }
    // Shifting by a power of two keeps the grid exact, so ties survive.
    tb::LabelLogprobs shifted = lp;
    const double shift = std::ldexp(1.0, static_cast<int>(rng.uniform_index(8))) * (rng.bernoulli(0.5) ? 1 : -1);
    for (auto& v : shifted) {
      if (v && std::isfinite(*v)) *v += shift;
    }
    const auto ps = tb::classify_logprob(shifted);
    bool same = ps.label == pred.label && ps.tie_broken == pred.tie_broken;
    for (std::size_t i = 0; i < 4; ++i) {
      same = same && std::abs(ps.distribution->probabilities()[i] - pred.distribution->probabilities()[i]) < 1e-12;
    }
    shift_mismatch += !same;
  }
  o.check(label_mismatch == 0, "argmax");
  o.check(tie_mismatch == 0, "tie flags");
  o.check(shift_mismatch == 0, "shift invariance");
  o.check(missing_mass == 0, "missing labels");
  o.check(worst_p < 1e-12L, "probabilities");
  o.detail << maps << " maps (" << ties << " with ties): label/tie/shift/missing mismatches=" << label_mismatch << "/"
           << tie_mismatch << "/" << shift_mismatch << "/" << missing_mass
           << " max |p - oracle|=" << static_cast<double>(worst_p);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "confusion fixture", 1, ed_fixture},
      {2, "headroom triple", 1, headroom_triple},
      {3, "cohen kappa from marginals", 1, cohen_marginals},
      {4, "mcnemar reconstruction", 1, mcnemar_reconstruction},
      {5, "grpo gradient check", 30, grpo_gradient},
      {6, "advantage vanishing", 1, advantage_vanishing},
      {7, "reward exhaustion", 1, reward_exhaustion},
      {8, "pairwise determinism and strata", 5, pairwise_strata},
      {9, "calibration suite", 10, calibration_suite},
      {10, "agreement suite", 10, agreement_suite},
      {11, "resampling reproducibility", 60, resampling},
      {12, "collection protocol", 5, collection_protocol},
      {13, "classification protocol", 5, classification_protocol},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " EXCEPTION: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail << " FAILED(runtime over " << c.budget_seconds << " s)";
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s (%.3f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                o.detail.str().c_str());
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
