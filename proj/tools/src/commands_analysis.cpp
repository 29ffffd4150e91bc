#include <algorithm>
#include <cmath>

#include "commands.hpp"
#include "tierbench/calibrate.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"
#include "tierbench/metrics.hpp"
#include "tierbench/stats.hpp"

namespace tierbench::cli {

using nlohmann::json;

namespace {

struct Resolved {
  std::vector<std::string> ids;
  std::vector<Tier> preds;
  std::vector<Tier> truths;
  std::vector<const Prediction*> predictions;
};

Resolved resolved_items(const Aligned& a) {
  Resolved r;
  for (std::size_t i = 0; i < a.truths.size(); ++i) {
    if (!a.predictions[i]) continue;
    r.ids.push_back(a.pitch_ids[i]);
    r.preds.push_back(a.predictions[i]->label);
    r.truths.push_back(a.truths[i]);
    r.predictions.push_back(&*a.predictions[i]);
  }
  return r;
}

std::vector<Aligned> aligned_nonempty(const PredictionFile& preds, const BenchmarkSet& bench) {
  auto aligned = align(preds, bench);
  if (aligned.empty()) throw Error(ErrorCode::kEmptyInput, "no prediction records");
  return aligned;
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// std::vector<bool> is bit-packed and cannot back a span.
class BoolBuffer {
 public:
  explicit BoolBuffer(const std::vector<bool>& v) : data_(new bool[v.size()]), size_(v.size()) {
    std::copy(v.begin(), v.end(), data_.get());
  }
  std::span<const bool> span() const { return {data_.get(), size_}; }

 private:
  std::unique_ptr<bool[]> data_;
  std::size_t size_;
};

json interval_json(const Interval& i) { return {{"low", i.low}, {"high", i.high}}; }

Sidedness sided_from_name(const std::string& s) {
  if (s == "two-sided") return Sidedness::kTwoSided;
  if (s == "greater") return Sidedness::kGreater;
  if (s == "less") return Sidedness::kLess;
  throw Error(ErrorCode::kInvalidArgument, "unknown alternative '" + s + "'");
}

McNemarMode mcnemar_mode(const std::string& s) {
  if (s == "exact") return McNemarMode::kExact;
  if (s == "cc") return McNemarMode::kContinuityCorrected;
  throw Error(ErrorCode::kInvalidArgument, "unknown McNemar mode '" + s + "' (expected exact or cc)");
}

json calibration_for(const std::vector<double>& conf, const std::vector<bool>& correct,
                     const std::vector<LabelDistribution>& dists, const std::vector<Tier>& truths,
                     const std::vector<std::string>& ids, std::size_t bins, json& selective) {
  if (conf.empty()) throw Error(ErrorCode::kEmptyInput, "no scored items to calibrate");
  const BoolBuffer flags(correct);
  const CalibrationReport rep = calibration_report(conf, flags.span(), dists, truths, bins);
  selective = to_json(selective_curve(conf, flags.span(), ids));
  return to_json(rep);
}

// Ratings as per-pitch label lists and per-rater maps.
PanelRatings panel_ratings(const std::vector<const RaterRecord*>& recs) {
  PanelRatings out;
  for (const auto* r : recs) out[r->pitch_id].emplace_back(r->rater_id, r->tier);
  return out;
}

}  // namespace

json run_metrics(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench, const MetricsOptions& opt,
                 const std::string& prefix) {
  const CiMethod method = ci_method_from_name(opt.ci);
  BootstrapOptions boot;
  boot.draws = opt.draws;
  boot.seed = ctx.seed();
  boot.level = opt.level;
  json evaluators = json::object();
  std::string csv = metrics_csv_header();
  for (const auto& a : aligned_nonempty(preds, bench)) {
    const Resolved r = resolved_items(a);
    json e;
    e["n_benchmark"] = bench.pitches.size();
    e["n_missing"] = a.missing;
    e["n_unresolved"] = a.unresolved;
    const auto flags = a.correct();
    const auto k = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    e["accuracy_all_items"] = bench.pitches.empty() ? 0.0 : static_cast<double>(k) / bench.pitches.size();
    if (r.preds.empty()) {
      e["report"] = nullptr;
      e["note"] = "no resolved predictions";
      evaluators[a.evaluator] = e;
      continue;
    }
    const ConfusionMatrix cm = confusion(r.preds, r.truths);
    MetricsReport rep = summarize(cm, bench.chance);
    rep.ci = accuracy_ci(cm, method, opt.level, boot);
    if (opt.f1_ci) rep.macro_f1_ci = macro_f1_bootstrap_ci(r.preds, r.truths, boot);
    e["report"] = to_json(rep);
    e["confusion"] = to_json(cm);
    e["error_profile"] = to_json(error_profile(r.preds, r.truths));
    e["prediction_entropy"] = prediction_entropy(cm.predicted_counts());
    evaluators[a.evaluator] = e;
    csv += metrics_csv_row(a.evaluator, a.evaluator, rep, cm);
  }
  json out = {{"benchmark_id", bench.id},
              {"ci_method", ci_method_name(method)},
              {"level", opt.level},
              {"unknown_pitch_ids", preds.unknown_pitch_ids},
              {"evaluators", evaluators}};
  ctx.write_json(prefix + "metrics.json", out);
  ctx.write(prefix + "metrics.csv", csv);
  return out;
}

json run_calibration_preds(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench, std::size_t bins,
                           const std::string& prefix) {
  json cal = json::object(), sel = json::object();
  for (const auto& a : aligned_nonempty(preds, bench)) {
    const Resolved r = resolved_items(a);
    std::vector<double> conf;
    std::vector<bool> correct;
    std::vector<LabelDistribution> dists;
    bool have_dists = !r.predictions.empty();
    for (std::size_t i = 0; i < r.predictions.size(); ++i) {
      conf.push_back(confidence_of(*r.predictions[i]));
      correct.push_back(r.preds[i] == r.truths[i]);
      if (r.predictions[i]->distribution) {
        dists.push_back(*r.predictions[i]->distribution);
      } else {
        have_dists = false;
      }
    }
    if (!have_dists) dists.clear();
    if (conf.empty()) {
      cal[a.evaluator] = {{"note", "no resolved predictions"}};
      continue;
    }
    json curve;
    cal[a.evaluator] = calibration_for(conf, correct, dists, r.truths, r.ids, bins, curve);
    cal[a.evaluator]["n_excluded"] = a.missing + a.unresolved;
    sel[a.evaluator] = curve;
  }
  ctx.write_json(prefix + "calibration.json", cal);
  ctx.write_json(prefix + "selective.json", sel);
  return cal;
}

json run_agreement_preds(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench,
                         const std::string& prefix) {
  RaterLabels labels;
  for (const auto& a : aligned_nonempty(preds, bench)) {
    auto& m = labels[a.evaluator];
    for (std::size_t i = 0; i < a.pitch_ids.size(); ++i) {
      if (a.predictions[i]) m[a.pitch_ids[i]] = a.predictions[i]->label;
    }
  }
  json out = to_json(agreement_report(labels));
  ctx.write_json(prefix + "agreement.json", out);
  return out;
}

json run_compendium(RunContext& ctx, const PredictionFile& preds, const BenchmarkSet& bench, const std::string& mode,
                    const std::string& prefix) {
  const McNemarMode mm = mcnemar_mode(mode);
  const auto aligned = aligned_nonempty(preds, bench);
  std::vector<std::vector<bool>> flags;
  json per = json::object();
  for (const auto& a : aligned) {
    flags.push_back(a.correct());
    const auto& f = flags.back();
    const auto k = static_cast<std::size_t>(std::count(f.begin(), f.end(), true));
    const std::size_t n = f.size();
    per[a.evaluator] = {{"n", n},
                        {"correct", k},
                        {"accuracy", n == 0 ? 0.0 : static_cast<double>(k) / n},
                        {"wilson_95", interval_json(wilson_ci(k, n))},
                        {"binomial_vs_chance", to_json(binomial_test(k, n, bench.chance, Sidedness::kGreater))}};
  }
  std::vector<TestResult> tests;
  std::vector<std::pair<std::string, std::string>> names;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    for (std::size_t j = i + 1; j < aligned.size(); ++j) {
      tests.push_back(mcnemar(BoolBuffer(flags[i]).span(), BoolBuffer(flags[j]).span(), mm));
      names.emplace_back(aligned[i].evaluator, aligned[j].evaluator);
    }
  }
  std::vector<double> ps;
  for (const auto& t : tests) ps.push_back(t.p);
  const auto adjusted = holm_adjust(ps);
  json pairs = json::array();
  std::string csv = io::csv_row({"evaluator_a", "evaluator_b", "only_a_correct", "only_b_correct", "statistic", "p",
                                 "p_holm"});
  for (std::size_t t = 0; t < tests.size(); ++t) {
    json j = to_json(tests[t]);
    j["a"] = names[t].first;
    j["b"] = names[t].second;
    j["p_holm"] = adjusted[t];
    pairs.push_back(j);
    const auto b = tests[t].details.count("b") ? tests[t].details.at("b") : 0.0;
    const auto c = tests[t].details.count("c") ? tests[t].details.at("c") : 0.0;
    csv += io::csv_row({names[t].first, names[t].second, format_fixed(b, 0), format_fixed(c, 0),
                        tests[t].statistic ? format_fixed(*tests[t].statistic, 4) : "", format_fixed(tests[t].p, 6),
                        format_fixed(adjusted[t], 6)});
  }
  json out = {{"mcnemar_mode", mode}, {"evaluators", per}, {"pairwise", pairs}};
  if (aligned.size() >= 3) {
    std::vector<std::vector<bool>> rows(bench.pitches.size(), std::vector<bool>(aligned.size()));
    for (std::size_t e = 0; e < aligned.size(); ++e) {
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i][e] = flags[e][i];
    }
    out["cochran_q"] = to_json(cochran_q(rows));
  }
  ctx.write_json(prefix + "compendium.json", out);
  ctx.write(prefix + "compendium.csv", csv);
  return out;
}

namespace {

void register_metrics(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds;
    std::string bench;
    MetricsOptions m;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("metrics", "Accuracy, macro-F1, confusion and error profile per evaluator");
  sub->add_option("--pred,--preds", o->preds, "Prediction files (JSONL)")->required();
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)")->required();
  sub->add_option("--ci", o->m.ci, "Accuracy interval: wilson, normal, clopper_pearson, bootstrap")->capture_default_str();
  sub->add_option("--level", o->m.level, "Interval level")->capture_default_str();
  sub->add_option("--draws", o->m.draws, "Bootstrap draws")->capture_default_str();
  sub->add_flag("--f1-ci", o->m.f1_ci, "Bootstrap interval on macro-F1");
  reg.add(sub, "metrics", [o](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, o->bench);
    const auto preds = read_predictions(ctx, as_paths(o->preds), bench);
    run_metrics(ctx, preds, bench, o->m, "");
  });
}

void register_calibrate(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds;
    std::string bench, ratings, panel = "all";
    std::size_t bins = 10;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("calibrate", "ECE, Brier and selective-prediction curves");
  sub->add_option("--pred,--preds", o->preds, "Prediction files (JSONL)");
  sub->add_option("--ratings", o->ratings, "Human ratings; confidence comes from the Likert item");
  sub->add_option("--panel", o->panel, "Rating panel: all, expert, junior")->capture_default_str();
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)")->required();
  sub->add_option("--bins", o->bins, "Equal-width confidence bins")->capture_default_str();
  reg.add(sub, "calibrate", [o](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, o->bench);
    if (o->preds.empty() == o->ratings.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "pass exactly one of --pred or --ratings");
    }
    if (!o->preds.empty()) {
      run_calibration_preds(ctx, read_predictions(ctx, as_paths(o->preds), bench), bench, o->bins, "");
      return;
    }
    const auto ratings = read_ratings(ctx, o->ratings, {});
    const auto truths = bench.truths();
    std::vector<double> conf;
    std::vector<bool> correct;
    std::vector<Tier> tv;
    std::vector<std::string> ids;
    std::size_t unknown = 0;
    for (const auto* r : select_panel(ratings, parse_panel(o->panel))) {
      const auto t = truths.find(r->pitch_id);
      if (t == truths.end()) {
        ++unknown;
        continue;
      }
      conf.push_back(confidence_of(*r));
      correct.push_back(r->tier == t->second);
      tv.push_back(t->second);
      ids.push_back(r->rater_id + "/" + r->pitch_id);
    }
    json curve;
    json cal = {{o->panel, calibration_for(conf, correct, {}, tv, ids, o->bins, curve)}};
    cal[o->panel]["n_unknown_pitch"] = unknown;
    ctx.write_json("calibration.json", cal);
    ctx.write_json("selective.json", json{{o->panel, curve}});
  });
}

void register_agreement(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds;
    std::string bench, ratings, panel = "all";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("agreement", "Fleiss kappa, Krippendorff alpha and pairwise Cohen kappa");
  sub->add_option("--pred,--preds", o->preds, "Prediction files; each evaluator is one rater");
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (required with --pred)");
  sub->add_option("--ratings", o->ratings, "Human ratings");
  sub->add_option("--panel", o->panel, "Rating panel: all, expert, junior")->capture_default_str();
  reg.add(sub, "agreement", [o](RunContext& ctx) {
    if (o->preds.empty() == o->ratings.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "pass exactly one of --pred or --ratings");
    }
    if (!o->preds.empty()) {
      if (o->bench.empty()) throw Error(ErrorCode::kInvalidArgument, "--bench is required with --pred");
      const auto bench = read_benchmark(ctx, o->bench);
      run_agreement_preds(ctx, read_predictions(ctx, as_paths(o->preds), bench), bench, "");
      return;
    }
    const auto ratings = read_ratings(ctx, o->ratings, {});
    RaterLabels labels;
    for (const auto* r : select_panel(ratings, parse_panel(o->panel))) labels[r->rater_id][r->pitch_id] = r->tier;
    json out = to_json(agreement_report(labels));
    out["panel"] = o->panel;
    ctx.write_json("agreement.json", out);
  });
}

void register_stats(CLI::App& app, Registry& reg) {
  auto* stats = app.add_subcommand("stats", "Paired tests, proportion tests and panel resampling");
  stats->require_subcommand(1);

  struct Comp {
    std::vector<std::string> preds;
    std::string bench, mode = "cc";
  };
  auto c = std::make_shared<Comp>();
  auto* comp = stats->add_subcommand("compendium", "Pairwise McNemar with Holm adjustment, tests against chance");
  comp->add_option("--pred,--preds", c->preds, "Prediction files (JSONL)")->required();
  comp->add_option("--bench,--truth", c->bench, "Benchmark pitches (JSONL)")->required();
  comp->add_option("--mcnemar", c->mode, "exact or cc (continuity-corrected chi-square)")->capture_default_str();
  reg.add(comp, "stats compendium", [c](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, c->bench);
    run_compendium(ctx, read_predictions(ctx, as_paths(c->preds), bench), bench, c->mode, "");
  });

  struct Binom {
    std::size_t k = 0, n = 0;
    double p0 = kFourTierChance;
    std::string alt = "greater";
  };
  auto b = std::make_shared<Binom>();
  auto* binom = stats->add_subcommand("binomial", "Exact binomial test of k successes in n");
  binom->add_option("--k", b->k, "Successes")->required();
  binom->add_option("--n", b->n, "Trials")->required();
  binom->add_option("--p0", b->p0, "Null success probability")->capture_default_str();
  binom->add_option("--alternative", b->alt, "two-sided, greater or less")->capture_default_str();
  reg.add(binom, "stats binomial", [b](RunContext& ctx) {
    ctx.write_json("binomial.json", to_json(binomial_test(b->k, b->n, b->p0, sided_from_name(b->alt))));
  });

  struct Prop {
    std::size_t k = 0, n = 0;
    double level = 0.95;
    std::string method = "wilson";
  };
  auto p = std::make_shared<Prop>();
  auto* prop = stats->add_subcommand("interval", "Interval for a proportion");
  prop->add_option("--k", p->k, "Successes")->required();
  prop->add_option("--n", p->n, "Trials")->required();
  prop->add_option("--level", p->level, "Interval level")->capture_default_str();
  prop->add_option("--method", p->method, "wilson, normal or clopper_pearson")->capture_default_str();
  reg.add(prop, "stats interval", [p](RunContext& ctx) {
    const CiMethod m = ci_method_from_name(p->method);
    json out = interval_json(proportion_ci(p->k, p->n, m, p->level));
    out["method"] = ci_method_name(m);
    out["level"] = p->level;
    out["k"] = p->k;
    out["n"] = p->n;
    ctx.write_json("interval.json", out);
  });

  struct Sub {
    std::string ratings, bench, panel = "junior";
    double target = 3.0;
    std::size_t draws = 5000;
    double level = 0.95;
    unsigned threads = 1;
    bool per_draw = false;
  };
  auto s = std::make_shared<Sub>();
  auto* subs = stats->add_subcommand("subsample", "Matched-N panel subsampling with majority vote");
  subs->add_option("--ratings", s->ratings, "Human ratings")->required();
  subs->add_option("--bench,--truth", s->bench, "Benchmark pitches (JSONL)")->required();
  subs->add_option("--panel", s->panel, "Rating panel: all, expert, junior")->capture_default_str();
  subs->add_option("--target", s->target, "Raters sampled per pitch")->capture_default_str();
  subs->add_option("--draws", s->draws, "Monte Carlo draws")->capture_default_str();
  subs->add_option("--level", s->level, "Interval level")->capture_default_str();
  subs->add_option("--threads", s->threads, "Worker threads; output does not depend on this")->capture_default_str();
  subs->add_flag("--per-draw", s->per_draw, "Include per-draw series");
  reg.add(subs, "stats subsample", [s](RunContext& ctx) {
    const auto bench = read_benchmark(ctx, s->bench);
    const auto ratings = read_ratings(ctx, s->ratings, {});
    const auto truths = bench.truths();
    PanelRatings pr;
    for (const auto& [pitch, v] : panel_ratings(select_panel(ratings, parse_panel(s->panel)))) {
      if (truths.count(pitch)) pr[pitch] = v;
    }
    const auto rep = matched_n_subsample(pr, truths, s->target, s->draws, ctx.seed(), s->level, s->threads);
    json out = to_json(rep, s->per_draw);
    out["panel"] = s->panel;
    out["target"] = s->target;
    ctx.write_json("subsample.json", out);
  });
}

}  // namespace

void register_analysis_commands(CLI::App& app, Registry& reg) {
  register_metrics(app, reg);
  register_calibrate(app, reg);
  register_agreement(app, reg);
  register_stats(app, reg);
}

}  // namespace tierbench::cli
