#include <algorithm>
#include <cctype>

#include "commands.hpp"
#include "tierbench/aggregate.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"
#include "tierbench/metrics.hpp"
#include "tierbench/pairwise.hpp"
#include "tierbench/rlsim.hpp"

namespace tierbench::cli {

using nlohmann::json;

namespace {

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

int parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::kInvalidArgument, "bad " + what + " '" + s + "'");
  return v;
}

// "4of4", "share:0.5" or "unanimous:2".
ConsensusPolicy parse_policy(const std::string& s) {
  ConsensusPolicy p;
  if (s.rfind("share:", 0) == 0) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s.substr(6), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() - 6) throw Error(ErrorCode::kInvalidArgument, "bad share in policy '" + s + "'");
    p = ConsensusPolicy::vote_share(v);
  } else if (s.rfind("unanimous:", 0) == 0) {
    p = ConsensusPolicy::unanimity(parse_int(s.substr(10), "rater minimum"));
  } else if (const auto pos = s.find("of"); pos != std::string::npos) {
    p = ConsensusPolicy::k_of_n(parse_int(s.substr(0, pos), "k"), parse_int(s.substr(pos + 2), "n"));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown policy '" + s + "' (expected KofN, share:X or unanimous:M)");
  }
  validate(p);
  return p;
}

json consensus_table(RunContext& ctx, const PitchLabels& labels, const PitchTruths& truths,
                     const std::vector<std::string>& policies, const std::string& prefix) {
  json rows = json::array();
  std::vector<std::string> header = {"policy", "n_total", "n_covered", "coverage_pct", "accuracy_pct"};
  for (Tier t : kAllTiers) header.push_back("acc_" + std::string(name(t)) + "_pct");
  std::string csv = io::csv_row(header);
  for (const auto& ps : policies) {
    const ConsensusReport rep = consensus_filter(labels, truths, parse_policy(ps));
    json j = to_json(rep);
    j["label"] = ps;
    rows.push_back(j);
    std::vector<std::string> row = {ps, std::to_string(rep.total), std::to_string(rep.covered_pitch_ids.size()),
                                    format_percent(rep.coverage, 2),
                                    rep.accuracy ? format_percent(*rep.accuracy, 2) : ""};
    for (Tier t : kAllTiers) {
      const auto it = rep.per_tier_accuracy.find(t);
      row.push_back(it == rep.per_tier_accuracy.end() ? "" : format_percent(it->second, 2));
    }
    csv += io::csv_row(row);
  }
  json out = {{"policies", rows}};
  ctx.write_json(prefix + "consensus.json", out);
  ctx.write(prefix + "consensus.csv", csv);
  return out;
}

std::vector<std::string> default_policies(std::size_t raters) {
  std::vector<std::string> out;
  for (std::size_t k = raters; k >= 1; --k) out.push_back(std::to_string(k) + "of" + std::to_string(raters));
  return out;
}

}  // namespace

json run_consensus_preds(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                         const std::vector<std::string>& policies, const std::string& prefix) {
  const auto aligned = align(preds, bench);
  if (aligned.empty()) throw Error(ErrorCode::kEmptyInput, "no prediction records");
  PitchLabels labels;
  for (const auto& p : bench.pitches) labels[p.id];
  for (const auto& a : aligned) {
    for (std::size_t i = 0; i < a.pitch_ids.size(); ++i) {
      if (a.predictions[i]) labels[a.pitch_ids[i]].push_back(a.predictions[i]->label);
    }
  }
  json out = consensus_table(ctx, labels, bench.truths(),
                             policies.empty() ? default_policies(aligned.size()) : policies, prefix);
  return out;
}

json run_ensembles(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench, std::size_t min_size,
                   std::size_t max_size, const std::string& prefix) {
  std::vector<Aligned> members;
  json skipped = json::array();
  for (auto& a : align(preds, bench)) {
    if (a.complete_distributions()) {
      members.push_back(std::move(a));
    } else {
      skipped.push_back(a.evaluator);
    }
  }
  if (members.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "ensembles need at least two evaluators with a distribution for every pitch");
  }
  if (members.size() > 16) throw Error(ErrorCode::kInvalidArgument, "at most 16 ensemble members are supported");
  min_size = std::max<std::size_t>(min_size, 2);
  max_size = std::min(max_size == 0 ? members.size() : max_size, members.size());
  std::vector<Tier> truths;
  for (const auto& p : bench.pitches) truths.push_back(p.truth);
  std::vector<EnsembleCandidate> cands;
  for (std::uint32_t mask = 1; mask < (1u << members.size()); ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size < min_size || size > max_size) continue;
    EnsembleCandidate c;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (mask & (1u << m)) c.spec.member_ids.push_back(members[m].evaluator);
    }
    std::vector<Tier> labels;
    std::vector<LabelDistribution> d;
    for (std::size_t i = 0; i < truths.size(); ++i) {
      d.clear();
      for (std::size_t m = 0; m < members.size(); ++m) {
        if (mask & (1u << m)) d.push_back(*members[m].predictions[i]->distribution);
      }
      labels.push_back(ensemble_average(d).label);
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) k += labels[i] == truths[i];
    c.accuracy = truths.empty() ? 0.0 : static_cast<double>(k) / truths.size();
    c.macro_f1 = macro_f1(labels, truths);
    cands.push_back(std::move(c));
  }
  const auto ranked = rank_ensembles(std::move(cands));
  json rows = json::array();
  std::string csv = io::csv_row({"rank", "members", "size", "accuracy_pct", "macro_f1", "headroom_pct"});
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& c = ranked[r];
    std::string joined;
    for (const auto& id : c.spec.member_ids) joined += (joined.empty() ? "" : "+") + id;
    rows.push_back({{"rank", r + 1},
                    {"members", c.spec.member_ids},
                    {"accuracy", c.accuracy},
                    {"macro_f1", c.macro_f1},
                    {"headroom", headroom(c.accuracy, bench.chance)}});
    csv += io::csv_row({std::to_string(r + 1), joined, std::to_string(c.spec.member_ids.size()),
                        format_percent(c.accuracy, 2), format_fixed(c.macro_f1, 4),
                        format_percent(headroom(c.accuracy, bench.chance), 2)});
  }
  json out = {{"ensembles", rows}, {"skipped_evaluators", skipped}, {"aggregation", "probability_average"}};
  ctx.write_json(prefix + "ensembles.json", out);
  ctx.write(prefix + "ensembles.csv", csv);
  return out;
}

namespace {

std::map<int, std::size_t> parse_strata(const std::string& s) {
  std::map<int, std::size_t> out;
  for (const auto& part : split_list(s, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "bad stratum '" + part + "' (expected d:count)");
    const int d = parse_int(part.substr(0, colon), "distance");
    const int n = parse_int(part.substr(colon + 1), "pair count");
    if (n < 0) throw Error(ErrorCode::kInvalidArgument, "negative pair count in '" + part + "'");
    out[d] = static_cast<std::size_t>(n);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "no strata given");
  return out;
}

void register_consensus(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds, policies;
    std::string bench, ratings, panel = "all";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("consensus", "Coverage and accuracy of consensus-filtered labels");
  sub->add_option("--pred,--preds", o->preds, "Prediction files; each evaluator is one voter");
  sub->add_option("--ratings", o->ratings, "Human ratings; each rater is one voter");
  sub->add_option("--panel", o->panel, "Rating panel: all, expert, junior")->capture_default_str();
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)")->required();
  sub->add_option("--policy", o->policies, "KofN, share:X or unanimous:M (repeatable; default every KofN)");
  reg.add(sub, "consensus", [o](RunContext& ctx) {
    if (o->preds.empty() == o->ratings.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "pass exactly one of --pred or --ratings");
    }
    const auto bench = read_benchmark(ctx, o->bench);
    if (!o->preds.empty()) {
      run_consensus_preds(ctx, read_predictions(ctx, as_paths(o->preds), bench), bench, o->policies, "");
      return;
    }
    const auto ratings = read_ratings(ctx, o->ratings, {});
    const auto truths = bench.truths();
    PitchLabels labels;
    std::size_t max_raters = 0;
    for (const auto& p : bench.pitches) labels[p.id];
    for (const auto* r : select_panel(ratings, parse_panel(o->panel))) {
      const auto it = labels.find(r->pitch_id);
      if (it == labels.end()) continue;
      it->second.push_back(r->tier);
      max_raters = std::max(max_raters, it->second.size());
    }
    std::vector<std::string> policies = o->policies;
    if (policies.empty()) policies = {"share:0.5", "share:0.75", "unanimous:2", "unanimous:3"};
    consensus_table(ctx, labels, truths, policies, "");
    ctx.note("max_raters_per_pitch", max_raters);
  });
}

void register_ensemble(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds;
    std::string bench;
    std::size_t min_size = 2, max_size = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("ensemble", "Build every probability-average ensemble and rank them");
  sub->add_option("--pred,--preds", o->preds, "Prediction files with label distributions")->required();
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)")->required();
  sub->add_option("--min-size", o->min_size, "Smallest ensemble")->capture_default_str();
  sub->add_option("--max-size", o->max_size, "Largest ensemble (0 = all members)")->capture_default_str();
  reg.add(sub, "ensemble", [o](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, o->bench);
    run_ensembles(ctx, read_predictions(ctx, as_paths(o->preds), bench), bench, o->min_size, o->max_size, "");
  });
}

void register_pairwise(CLI::App& app, Registry& reg) {
  auto* pw = app.add_subcommand("pairwise", "Cross-tier pair benchmark");
  pw->require_subcommand(1);

  struct Build {
    std::string bench, strata = "1:150,2:100,3:50";
  };
  auto b = std::make_shared<Build>();
  auto* build = pw->add_subcommand("build", "Sample stratified cross-tier pairs");
  build->add_option("--bench,--truth", b->bench, "Benchmark pitches (JSONL)")->required();
  build->add_option("--strata", b->strata, "distance:count list")->capture_default_str();
  reg.add(build, "pairwise build", [b](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, b->bench);
    const PairSet set = build_pairs(bench, ctx.seed(), parse_strata(b->strata));
    ctx.write("pairs.jsonl", serialize_pairs(set));
    if (ctx.csv()) {
      std::string csv = io::csv_row({"pair_id", "pitch_low", "pitch_high", "distance", "pair_type", "presented"});
      for (const auto& p : set.pairs) {
        csv += io::csv_row({p.id, p.pitch_low, p.pitch_high, std::to_string(p.distance), p.pair_type,
                            p.presented_order == PresentedOrder::kLowFirst ? "low_first" : "high_first"});
      }
      ctx.write("pairs.csv", csv);
    }
    json counts = json::object();
    for (const auto& p : set.pairs) counts[std::to_string(p.distance)] = counts.value(std::to_string(p.distance), 0) + 1;
    ctx.note("pairs_by_distance", counts);
  });

  struct Score {
    std::string pairs, choices;
  };
  auto s = std::make_shared<Score>();
  auto* score = pw->add_subcommand("score", "Score one evaluator's pair choices");
  score->add_option("--pairs", s->pairs, "Pair file from pairwise build")->required();
  score->add_option("--choices", s->choices, "Choice file (JSONL)")->required();
  reg.add(score, "pairwise score", [s](RunContext& ctx) {
    const auto set = load_pairs(s->pairs);
    ctx.add_input(s->pairs);
    const auto choices = load_choices(s->choices);
    ctx.add_input(s->choices);
    ctx.write_json("pair_score.json", to_json(score_pairs(choices, set)));
  });

  struct Disc {
    std::string pairs, a, b;
  };
  auto d = std::make_shared<Disc>();
  auto* disc = pw->add_subcommand("discord", "Discordant pairs between two evaluators with exact McNemar");
  disc->add_option("--pairs", d->pairs, "Pair file from pairwise build")->required();
  disc->add_option("--a", d->a, "First choice file")->required();
  disc->add_option("--b", d->b, "Second choice file")->required();
  reg.add(disc, "pairwise discord", [d](RunContext& ctx) {
    const auto set = load_pairs(d->pairs);
    ctx.add_input(d->pairs);
    const auto a = load_choices(d->a);
    ctx.add_input(d->a);
    const auto b = load_choices(d->b);
    ctx.add_input(d->b);
    ctx.write_json("discordance.json", to_json(discordance(a, b, set)));
  });
}

json policy_json(const rl::ToyPolicy& p) {
  json t = json::array();
  for (const auto& [key, logits] : p.table()) {
    t.push_back({{"bucket", key.first}, {"position", key.second}, {"logits", logits}});
  }
  return {{"max_tokens", p.max_tokens()}, {"hint_strength", p.hint_strength()}, {"logits", t}};
}

void register_rlsim(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string config;
    std::optional<std::size_t> steps;
    std::optional<bool> privileged;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("rlsim", "Toy group-relative policy optimization runs");
  sub->add_option("--kv", o->config, "key = value training config");
  sub->add_option("--steps", o->steps, "Override the number of steps");
  sub->add_option("--privileged", o->privileged, "Override privileged sampling (true/false)");
  reg.add(sub, "rlsim", [o, sub](RunContext& ctx) {
    rl::TrainConfig cfg;
    if (!o->config.empty()) {
      cfg = rl::train_config_from_text(io::read_file(o->config));
      ctx.add_input(o->config);
    }
    if (o->config.empty() || sub->get_option("--seed")->count() > 0) cfg.seed = ctx.seed();
    if (o->steps) cfg.steps = *o->steps;
    if (o->privileged) cfg.privileged_sampling = *o->privileged;
    const auto result = rl::train(cfg);
    std::vector<json> lines;
    for (const auto& s : result.log) lines.push_back(to_json(s));
    ctx.write("training_log.jsonl", io::to_jsonl(lines));
    ctx.write_json("final_policy.json", policy_json(result.policy));
    json summary = {{"config", to_json(cfg)}, {"steps", result.log.size()}};
    if (!result.log.empty()) {
      summary["first"] = to_json(result.log.front());
      summary["last"] = to_json(result.log.back());
    }
    ctx.write_json("rlsim_summary.json", summary);
  });
}

void register_report(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds;
    std::string bench, ratings;
    MetricsOptions m;
    std::string mcnemar = "cc";
    std::size_t bins = 10;
    std::size_t subsample_draws = 5000;
    double subsample_target = 3.0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("report", "Run every analysis into one directory");
  sub->add_option("--pred,--preds", o->preds, "Prediction files (JSONL)")->required();
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)")->required();
  sub->add_option("--ratings", o->ratings, "Human ratings (optional)");
  sub->add_option("--ci", o->m.ci, "Accuracy interval method")->capture_default_str();
  sub->add_option("--draws", o->m.draws, "Bootstrap draws")->capture_default_str();
  sub->add_option("--mcnemar", o->mcnemar, "exact or cc")->capture_default_str();
  sub->add_option("--bins", o->bins, "Calibration bins")->capture_default_str();
  sub->add_option("--subsample-draws", o->subsample_draws, "Panel subsampling draws")->capture_default_str();
  sub->add_option("--subsample-target", o->subsample_target, "Raters per pitch when subsampling")->capture_default_str();
  reg.add(sub, "report", [o](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, o->bench);
    const auto preds = read_predictions(ctx, as_paths(o->preds), bench);
    json index = json::object();
    auto attempt = [&](const std::string& section, const std::function<void()>& fn) {
      try {
        fn();
        index[section] = "ok";
      } catch (const Error& e) {
        index[section] = std::string("skipped: ") + e.what();
      }
    };
    run_metrics(ctx, preds, bench, o->m, "metrics/");
    index["metrics"] = "ok";
    attempt("calibration", [&] { run_calibration_preds(ctx, preds, bench, o->bins, "calibration/"); });
    attempt("agreement", [&] { run_agreement_preds(ctx, preds, bench, "agreement/"); });
    attempt("stats", [&] { run_compendium(ctx, preds, bench, o->mcnemar, "stats/"); });
    attempt("consensus", [&] { run_consensus_preds(ctx, preds, bench, {}, "consensus/"); });
    attempt("ensembles", [&] { run_ensembles(ctx, preds, bench, 2, 0, "ensembles/"); });
    attempt("pairwise", [&] { ctx.write("pairwise/pairs.jsonl", serialize_pairs(build_pairs(bench, ctx.seed()))); });
    if (!o->ratings.empty()) {
      const auto ratings = read_ratings(ctx, o->ratings, {});
      const auto truths = bench.truths();
      attempt("human_agreement", [&] {
        RaterLabels labels;
        for (const auto& r : ratings.records) labels[r.rater_id][r.pitch_id] = r.tier;
        ctx.write_json("human/agreement.json", to_json(agreement_report(labels)));
      });
      attempt("human_subsample", [&] {
        PanelRatings pr;
        for (const auto* r : select_panel(ratings, Panel::kJunior)) {
          if (truths.count(r->pitch_id)) pr[r->pitch_id].emplace_back(r->rater_id, r->tier);
        }
        const auto rep = matched_n_subsample(pr, truths, o->subsample_target, o->subsample_draws, ctx.seed());
        ctx.write_json("human/subsample.json", to_json(rep));
      });
    }
    ctx.write_json("report_index.json", index);
  });
}

}  // namespace

void register_misc_commands(CLI::App& app, Registry& reg) {
  register_consensus(app, reg);
  register_ensemble(app, reg);
  register_pairwise(app, reg);
  register_rlsim(app, reg);
  register_report(app, reg);
}

}  // namespace tierbench::cli
