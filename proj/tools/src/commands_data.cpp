#include <algorithm>

#include "commands.hpp"
#include "tierbench/collect.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"

namespace tierbench::cli {

using nlohmann::json;

namespace {

json tier_counts_json(const std::array<std::size_t, kNumTiers>& counts) {
  json j = json::object();
  for (Tier t : kAllTiers) j[std::string(name(t))] = counts[index(t)];
  return j;
}

class OfflineTransport final : public collect::Transport {
 public:
  collect::HttpResponse post(const collect::HttpRequest&) override {
    throw Error(ErrorCode::kTransportError, "offline: response is not in the cache");
  }
};

void register_ingest(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string bench, ratings, pool;
    std::vector<std::string> preds;
    bool junior_filter = false;
    double min_seconds = 60.0;
    std::size_t per_tier = 30;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("ingest", "Validate pitch, prediction and rating files; optionally assemble a balanced set");
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)");
  sub->add_option("--pred,--preds", o->preds, "Prediction files (JSONL)");
  sub->add_option("--ratings", o->ratings, "Human rating file (JSONL)");
  sub->add_flag("--junior-filter", o->junior_filter, "Drop junior raters below the mean-time threshold");
  sub->add_option("--min-seconds", o->min_seconds, "Mean seconds per pitch for the junior filter")->capture_default_str();
  sub->add_option("--pool", o->pool, "Pitch pool (JSONL) to sample a balanced benchmark from");
  sub->add_option("--per-tier", o->per_tier, "Pitches per tier when assembling")->capture_default_str();
  reg.add(sub, "ingest", [o](RunContext& ctx) {
    json summary;
    std::optional<BenchmarkSet> bench;
    if (!o->pool.empty()) {
      BenchmarkSet pool = read_benchmark(ctx, o->pool);
      BenchmarkSet set = assemble_balanced(pool.pitches, o->per_tier, ctx.seed());
      ctx.write("benchmark.jsonl", serialize_benchmark(set));
      if (ctx.csv()) ctx.write("benchmark.csv", benchmark_csv(set));
      summary["assembled"] = {{"id", set.id}, {"n", set.pitches.size()}, {"per_tier", o->per_tier}};
      bench = std::move(set);
    }
    if (!o->bench.empty()) {
      bench = read_benchmark(ctx, o->bench);
      if (ctx.csv()) ctx.write("benchmark.csv", benchmark_csv(*bench));
    }
    if (bench) {
      summary["benchmark"] = {{"id", bench->id},
                              {"n", bench->pitches.size()},
                              {"tier_counts", tier_counts_json(bench->tier_counts())},
                              {"per_tier_count", bench->per_tier_count},
                              {"balanced", bench->per_tier_count > 0}};
    }
    if (!o->preds.empty()) {
      PredictionFile all;
      json files = json::array();
      for (const auto& p : o->preds) {
        PredictionFile f = load_predictions(p);
        ctx.add_input(p);
        files.push_back({{"path", p}, {"records", f.records.size()}});
        for (auto& r : f.records) all.records.push_back(std::move(r));
      }
      json evaluators = json::object();
      for (const auto& [id, recs] : by_evaluator(all.records)) evaluators[id] = recs.size();
      summary["predictions"] = {{"files", files}, {"records", all.records.size()}, {"evaluators", evaluators}};
      if (bench) {
        flag_unknown_pitches(all, *bench);
        summary["predictions"]["unknown_pitch_ids"] = all.unknown_pitch_ids;
      }
      if (ctx.csv()) ctx.write("predictions.csv", predictions_csv(all));
    }
    if (!o->ratings.empty()) {
      RatingFilter filter{o->junior_filter, o->min_seconds};
      RatingsFile r = read_ratings(ctx, o->ratings, filter);
      summary["ratings"] = {{"records", r.records.size()},
                            {"filter", o->junior_filter},
                            {"min_mean_seconds", o->min_seconds},
                            {"excluded_raters", r.excluded_raters}};
      if (ctx.csv()) ctx.write("ratings.csv", ratings_csv(r));
    }
    if (summary.is_null()) throw Error(ErrorCode::kInvalidArgument, "nothing to ingest; pass --bench, --pred, --ratings or --pool");
    ctx.write_json("validation.json", summary);
  });
}

void register_collect(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string bench, base_url, model, mode = "logprob", prompt = "expert", cache, auth_env = "OPENAI_API_KEY",
                                        evaluator;
    std::size_t samples = 8, max_concurrent = 4, rpm = 60, retry_max = 3;
    double timeout = 60.0;
    std::optional<double> temperature, top_p;
    bool short_text = false, offline = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("collect", "Collect predictions from an OpenAI-compatible endpoint");
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches (JSONL)")->required();
  sub->add_option("--base-url", o->base_url, "Endpoint base URL, e.g. https://api.openai.com")->required();
  sub->add_option("--model", o->model, "Model name")->required();
  sub->add_option("--mode", o->mode, "logprob or sampled")->check(CLI::IsMember({"logprob", "sampled"}))->capture_default_str();
  sub->add_option("--prompt", o->prompt, "Prompt asset: expert, simplified, journal_anchored, economics")->capture_default_str();
  sub->add_option("--samples", o->samples, "Samples per pitch in sampled mode")->capture_default_str();
  sub->add_option("--cache", o->cache, "Response cache directory (default <out>/cache)");
  sub->add_option("--max-concurrent", o->max_concurrent, "Concurrent requests")->capture_default_str();
  sub->add_option("--rpm", o->rpm, "Requests per minute")->capture_default_str();
  sub->add_option("--retry-max", o->retry_max, "Retries per request")->capture_default_str();
  sub->add_option("--timeout", o->timeout, "Request timeout in seconds")->capture_default_str();
  sub->add_option("--auth-env", o->auth_env, "Environment variable holding the API key")->capture_default_str();
  sub->add_option("--temperature", o->temperature, "Sampling temperature (endpoint default when unset)");
  sub->add_option("--top-p", o->top_p, "Nucleus sampling mass (endpoint default when unset)");
  sub->add_option("--evaluator", o->evaluator, "Evaluator id (default: model name)");
  sub->add_flag("--short-text", o->short_text, "Send the short idea statement instead of the full text");
  sub->add_flag("--offline", o->offline, "Serve from the cache only; never touch the network");
  reg.add(sub, "collect", [o](RunContext& ctx) {
    const BenchmarkSet bench = read_benchmark(ctx, o->bench);
    collect::EndpointConfig endpoint;
    endpoint.base_url = o->base_url;
    endpoint.model_name = o->model;
    endpoint.auth_env_var = o->auth_env;
    endpoint.max_concurrent = o->max_concurrent;
    // Nothing leaves the process offline, so pacing would only add delay.
    endpoint.requests_per_minute = o->offline ? 60'000'000 : o->rpm;
    endpoint.retry_max = o->offline ? 0 : o->retry_max;
    endpoint.timeout_seconds = o->timeout;
    std::shared_ptr<collect::Transport> transport;
    if (o->offline) {
      transport = std::make_shared<OfflineTransport>();
    } else {
      transport = std::make_shared<collect::HttpTransport>();
    }
    auto cache = std::make_shared<collect::Cache>(o->cache.empty() ? ctx.out_dir() / "cache" : fs::path(o->cache));
    collect::Client client(endpoint, transport, cache, ctx.seed());
    collect::CollectOptions opts;
    opts.mode = o->mode == "sampled" ? collect::CollectMode::kSampled : collect::CollectMode::kLogprob;
    opts.prompt_asset = o->prompt;
    opts.evaluator_id = o->evaluator;
    opts.n_samples = o->samples;
    opts.sampling.temperature = o->temperature;
    opts.sampling.top_p = o->top_p;
    opts.use_short_text = o->short_text;
    opts.out_dir = ctx.out_dir();
    const auto result = collect::collect_benchmark(client, bench, opts);
    ctx.note("endpoint", to_json(endpoint));
    ctx.note("collection", {{"records", result.predictions.records.size()},
                            {"failures", result.failures.size()},
                            {"network_calls", result.stats.network_calls},
                            {"cache_hits", result.stats.cache_hits},
                            {"retries", result.stats.retries}});
    if (!result.failures.empty()) {
      throw Error(ErrorCode::kPartialCollection,
                  std::to_string(result.failures.size()) + " pitches failed; see failures.json");
    }
  });
}

void register_classify(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> preds;
    std::string bench;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("classify", "Resolve raw evaluator output into labels and run aggregates");
  sub->add_option("--pred,--preds", o->preds, "Prediction files (JSONL)")->required();
  sub->add_option("--bench,--truth", o->bench, "Benchmark pitches; enables run accuracy summaries");
  reg.add(sub, "classify", [o](RunContext& ctx) {
    PredictionFile all;
    for (const auto& p : o->preds) {
      PredictionFile f = load_predictions(p);
      ctx.add_input(p);
      for (auto& r : f.records) all.records.push_back(std::move(r));
    }
    std::optional<BenchmarkSet> bench;
    std::map<std::string, Tier, std::less<>> truths;
    if (!o->bench.empty()) {
      bench = read_benchmark(ctx, o->bench);
      truths = bench->truths();
      flag_unknown_pitches(all, *bench);
      ctx.note("unknown_pitch_ids", all.unknown_pitch_ids);
    }
    std::vector<json> lines;
    std::string csv = io::csv_row({"evaluator_id", "pitch_id", "kind", "label", "confidence", "tie_broken", "n_runs",
                                   "n_unresolved", "tied"});
    std::map<std::string, std::vector<RunAggregate>> runs_by_eval;
    for (const auto& r : all.records) {
      const auto pred = resolve_prediction(r);
      json j = {{"evaluator_id", r.evaluator_id}, {"pitch_id", r.pitch_id}, {"kind", kind_name(r.kind)}};
      j["label"] = pred ? json(name(pred->label)) : json(nullptr);
      j["confidence"] = pred ? json(pred->confidence) : json(nullptr);
      j["tie_broken"] = pred ? pred->tie_broken : false;
      if (pred && pred->distribution) {
        json d = json::object();
        for (Tier t : kAllTiers) d[std::string(name(t))] = (*pred->distribution)[t];
        j["distribution"] = d;
      }
      std::size_t n_runs = 0, unresolved = 0;
      bool tied = false;
      if (r.runs) {
        std::vector<std::optional<Tier>> parsed;
        json labels = json::array();
        for (const auto& run : *r.runs) {
          parsed.push_back(run.parsed);
          labels.push_back(run.parsed ? json(name(*run.parsed)) : json(nullptr));
          unresolved += !run.parsed;
        }
        n_runs = parsed.size();
        const auto truth = truths.find(r.pitch_id);
        RunAggregate agg = aggregate_runs(parsed, truth != truths.end() ? truth->second : Tier::kExceptional);
        tied = agg.tied;
        j["runs"] = {{"parsed", labels}, {"n_runs", n_runs}, {"n_unresolved", unresolved}, {"tied", tied},
                     {"majority", agg.majority ? json(name(*agg.majority)) : json(nullptr)}};
        if (truth != truths.end()) {
          j["runs"]["n_correct"] = agg.n_correct;
          agg.pitch_id = r.pitch_id;
          runs_by_eval[r.evaluator_id].push_back(agg);
        }
      }
      csv += io::csv_row({r.evaluator_id, r.pitch_id, std::string(kind_name(r.kind)),
                          pred ? std::string(name(pred->label)) : "", pred ? json(pred->confidence).dump() : "",
                          pred && pred->tie_broken ? "true" : "false", std::to_string(n_runs),
                          std::to_string(unresolved), tied ? "true" : "false"});
      lines.push_back(std::move(j));
    }
    ctx.write("classified.jsonl", io::to_jsonl(lines));
    if (ctx.csv()) ctx.write("classified.csv", csv);
    if (!runs_by_eval.empty()) {
      json summary = json::object();
      for (const auto& [eval, aggs] : runs_by_eval) {
        const RunSummary s = summarize_runs(aggs);
        summary[eval] = {{"n_pitches", s.n_pitches},
                         {"pitch_mean_accuracy", s.pitch_mean_accuracy},
                         {"effective_n", s.effective_n},
                         {"ties", s.ties},
                         {"majority_accuracy", s.majority_accuracy}};
      }
      ctx.write_json("run_summary.json", summary);
    }
  });
}

}  // namespace

void register_data_commands(CLI::App& app, Registry& reg) {
  register_ingest(app, reg);
  register_collect(app, reg);
  register_classify(app, reg);
}

}  // namespace tierbench::cli
