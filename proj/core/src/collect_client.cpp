#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <future>
#include <thread>

#include "tierbench/assets.hpp"
#include "tierbench/collect.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"
#include "tierbench/random.hpp"

namespace tierbench::collect {

using nlohmann::json;

// --- config -------------------------------------------------------------------

void validate(const EndpointConfig& e) {
  if (e.base_url.empty()) throw Error(ErrorCode::kInvalidArgument, "endpoint base_url is empty");
  if (e.model_name.empty()) throw Error(ErrorCode::kInvalidArgument, "endpoint model_name is empty");
  if (e.max_concurrent < 1) throw Error(ErrorCode::kInvalidArgument, "max_concurrent must be at least 1");
  if (e.requests_per_minute < 1) throw Error(ErrorCode::kInvalidArgument, "requests_per_minute must be at least 1");
  if (!(e.timeout_seconds > 0.0)) throw Error(ErrorCode::kInvalidArgument, "timeout_seconds must be positive");
  if (e.backoff_base_seconds < 0.0 || e.backoff_max_seconds < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "backoff durations must be nonnegative");
  }
}

EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig e;
  try {
    e.base_url = j.at("base_url").get<std::string>();
    e.model_name = j.at("model_name").get<std::string>();
    e.auth_env_var = j.value("auth_env_var", e.auth_env_var);
    e.max_concurrent = j.value("max_concurrent", e.max_concurrent);
    e.requests_per_minute = j.value("requests_per_minute", e.requests_per_minute);
    e.retry_max = j.value("retry_max", e.retry_max);
    e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
    e.backoff_base_seconds = j.value("backoff_base_seconds", e.backoff_base_seconds);
    e.backoff_max_seconds = j.value("backoff_max_seconds", e.backoff_max_seconds);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kSchemaError, std::string("endpoint config: ") + ex.what());
  }
  validate(e);
  return e;
}

json to_json(const EndpointConfig& e) {
  return {{"base_url", e.base_url},
          {"model_name", e.model_name},
          {"auth_env_var", e.auth_env_var},
          {"max_concurrent", e.max_concurrent},
          {"requests_per_minute", e.requests_per_minute},
          {"retry_max", e.retry_max},
          {"timeout_seconds", e.timeout_seconds},
          {"backoff_base_seconds", e.backoff_base_seconds},
          {"backoff_max_seconds", e.backoff_max_seconds}};
}

json to_json(const SamplingParams& p) {
  return {{"temperature", p.temperature ? json(*p.temperature) : json(nullptr)},
          {"top_p", p.top_p ? json(*p.top_p) : json(nullptr)},
          {"max_tokens", p.max_tokens ? json(*p.max_tokens) : json(nullptr)},
          {"seed", p.seed ? json(*p.seed) : json(nullptr)}};
}

SamplingParams sampling_from_json(const json& j) {
  SamplingParams p;
  if (j.contains("temperature") && !j["temperature"].is_null()) p.temperature = j["temperature"].get<double>();
  if (j.contains("top_p") && !j["top_p"].is_null()) p.top_p = j["top_p"].get<double>();
  if (j.contains("max_tokens") && !j["max_tokens"].is_null()) p.max_tokens = j["max_tokens"].get<int>();
  if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
  return p;
}

// --- token matching -----------------------------------------------------------

LabelLogprobs match_label_tokens(const std::vector<std::pair<std::string, double>>& candidates) {
  LabelLogprobs out{};
  bool any = false;
  for (const auto& [raw, lp] : candidates) {
    std::string token;
    for (unsigned char c : raw) {
      if (!std::isspace(c)) token.push_back(static_cast<char>(std::tolower(c)));
    }
    if (token.empty()) continue;
    std::optional<Tier> match;
    std::size_t hits = 0;
    for (Tier t : kAllTiers) {
      if (name(t).starts_with(token)) {
        match = t;
        ++hits;
      }
    }
    if (hits != 1) continue;
    auto& slot = out[index(*match)];
    if (!slot || lp > *slot) slot = lp;
    any = true;
  }
  if (!any) throw Error(ErrorCode::kNoLabelTokens, "no candidate token matches a tier label");
  return out;
}

// --- rate limiter ------------------------------------------------------------------

RateLimiter::RateLimiter(std::size_t requests_per_minute)
    : spacing_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(
          60.0 / static_cast<double>(std::max<std::size_t>(1, requests_per_minute))))) {}

Clock::time_point RateLimiter::acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    slot = last_ ? std::max(now, *last_ + spacing_) : now;
    last_ = slot;
  }
  std::this_thread::sleep_until(slot);
  return slot;
}

// --- client -------------------------------------------------------------------------

Client::Client(EndpointConfig endpoint, std::shared_ptr<Transport> transport, std::shared_ptr<Cache> cache,
               std::uint64_t jitter_seed)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      limiter_(endpoint_.requests_per_minute),
      jitter_seed_(jitter_seed) {
  validate(endpoint_);
  if (!transport_) throw Error(ErrorCode::kInvalidArgument, "client needs a transport");
}

ClientStats Client::stats() const { return {network_calls_.load(), cache_hits_.load(), retries_.load()}; }

std::string Client::api_key() const {
  if (endpoint_.auth_env_var.empty()) return {};
  const char* v = std::getenv(endpoint_.auth_env_var.c_str());
  return v ? std::string(v) : std::string();
}

HttpResponse Client::send_with_retry(const json& body) {
  HttpRequest req;
  req.base_url = endpoint_.base_url;
  req.path = "/v1/chat/completions";
  req.headers["Content-Type"] = "application/json";
  if (const std::string key = api_key(); !key.empty()) req.headers["Authorization"] = "Bearer " + key;
  req.body = body.dump();
  req.timeout_seconds = endpoint_.timeout_seconds;

  std::string last_error;
  for (std::size_t attempt = 0; attempt <= endpoint_.retry_max; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      Rng rng = Rng::substream(jitter_seed_, jitter_counter_.fetch_add(1));
      const double base = endpoint_.backoff_base_seconds * std::pow(2.0, static_cast<double>(attempt - 1));
      const double wait = std::min(endpoint_.backoff_max_seconds, base) * (0.5 + 0.5 * rng.uniform01());
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    {
      std::unique_lock lock(slots_mu_);
      slots_cv_.wait(lock, [&] { return slots_in_use_ < endpoint_.max_concurrent; });
      ++slots_in_use_;
    }
    struct Release {
      Client& c;
      ~Release() {
        {
          std::lock_guard lock(c.slots_mu_);
          --c.slots_in_use_;
        }
        c.slots_cv_.notify_one();
      }
    } release{*this};

    req.issued_at = limiter_.acquire();
    ++network_calls_;
    HttpResponse res;
    try {
      res = transport_->post(req);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransportError) throw;
      last_error = e.what();
      continue;
    }
    if (res.status == 401 || res.status == 403) {
      throw Error(ErrorCode::kAuthError, "endpoint rejected credentials (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status == 429 || res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw Error(ErrorCode::kTransportError, "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
    }
    return res;
  }
  throw Error(ErrorCode::kTransportError, "gave up after " + std::to_string(endpoint_.retry_max + 1) +
                                              " attempts: " + last_error);
}

std::string Client::request(const CacheKey& key, const json& body) {
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      return *hit;
    }
  }
  const HttpResponse res = send_with_retry(body);
  // The raw response is stored before any parsing.
  return cache_ ? cache_->put(key, res.body) : res.body;
}

namespace {

json chat_body(const std::string& model, const std::string& prompt, const std::string& pitch_text,
               const SamplingParams& params) {
  json body = {{"model", model},
               {"messages", json::array({{{"role", "system"}, {"content", prompt}},
                                         {{"role", "user"}, {"content", pitch_text}}})}};
  if (params.temperature) body["temperature"] = *params.temperature;
  if (params.top_p) body["top_p"] = *params.top_p;
  if (params.max_tokens) body["max_tokens"] = *params.max_tokens;
  if (params.seed) body["seed"] = *params.seed;
  return body;
}

const json& first_choice(const json& response) {
  if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty()) {
    throw Error(ErrorCode::kSchemaError, "response has no choices");
  }
  return response["choices"][0];
}

}  // namespace

LabelLogprobs Client::fetch_logprobs(const std::string& prompt, const std::string& pitch_text,
                                     const SamplingParams& params) {
  json body = chat_body(endpoint_.model_name, prompt, pitch_text, params);
  body["logprobs"] = true;
  body["top_logprobs"] = 20;
  body["max_tokens"] = 1;
  const CacheKey key = make_cache_key(endpoint_, "logprob", prompt, pitch_text, params, std::nullopt);
  const std::string raw = request(key, body);

  const json response = json::parse(raw, nullptr, false);
  if (response.is_discarded()) throw Error(ErrorCode::kSchemaError, "response is not JSON");
  const json& choice = first_choice(response);
  std::vector<std::pair<std::string, double>> candidates;
  try {
    const json& first = choice.at("logprobs").at("content").at(0);
    for (const auto& c : first.at("top_logprobs")) {
      candidates.emplace_back(c.at("token").get<std::string>(), c.at("logprob").get<double>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("response lacks top log-probabilities: ") + e.what());
  }
  return match_label_tokens(candidates);
}

std::vector<std::string> Client::fetch_samples(const std::string& prompt, const std::string& pitch_text,
                                               std::size_t n, const SamplingParams& params) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be at least 1");
  const json body = chat_body(endpoint_.model_name, prompt, pitch_text, params);
  std::vector<std::future<std::string>> pending;
  for (std::size_t i = 0; i < n; ++i) {
    pending.push_back(std::async(std::launch::async, [&, i] {
      const CacheKey key = make_cache_key(endpoint_, "sampled", prompt, pitch_text, params, i);
      const json response = json::parse(request(key, body), nullptr, false);
      if (response.is_discarded()) throw Error(ErrorCode::kSchemaError, "response is not JSON");
      try {
        return first_choice(response).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kSchemaError, std::string("response lacks message content: ") + e.what());
      }
    }));
  }
  std::vector<std::string> texts(n);
  std::vector<std::size_t> missing, ok;
  std::string first_error;
  for (std::size_t i = 0; i < n; ++i) {
    try {
      texts[i] = pending[i].get();
      ok.push_back(i);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kAuthError) {
        for (std::size_t j = i + 1; j < n; ++j) pending[j].wait();
        throw;
      }
      if (first_error.empty()) first_error = e.what();
      missing.push_back(i);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t m : missing) list += (list.empty() ? "" : ",") + std::to_string(m);
    throw PartialCollectionError(missing, ok, "missing samples [" + list + "]: " + first_error);
  }
  return texts;
}

// --- benchmark collection -------------------------------------------------------------

CollectResult collect_benchmark(Client& client, const BenchmarkSet& bench, const CollectOptions& options) {
  const std::string prompt(prompt_text(options.prompt_asset));
  const std::string evaluator = options.evaluator_id.empty() ? client.endpoint().model_name : options.evaluator_id;
  const ClientStats before = client.stats();

  // The journal is append-only across runs; finished pitches are replayed from
  // the cache on resume, so it only records progress.
  const auto journal_path = options.out_dir / "progress.jsonl";
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  const std::size_t n = bench.pitches.size();
  std::vector<std::optional<PredictionRecord>> records(n);
  std::vector<std::optional<Failure>> failures(n);
  std::mutex journal_mu;
  std::string journal =
      !options.out_dir.empty() && std::filesystem::exists(journal_path) ? io::read_file(journal_path) : std::string();
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const Pitch& pitch = bench.pitches[i];
      const std::string& text = options.use_short_text && pitch.text_short ? *pitch.text_short : pitch.text_full;
      PredictionRecord rec;
      rec.evaluator_id = evaluator;
      rec.pitch_id = pitch.id;
      std::string status = "done";
      try {
        if (options.mode == CollectMode::kLogprob) {
          rec.kind = PredictionKind::kLogprob;
          rec.label_logprobs = client.fetch_logprobs(prompt, text, options.sampling);
          rec.distribution = classify_logprob(*rec.label_logprobs).distribution;
        } else {
          rec.kind = PredictionKind::kSampled;
          std::vector<SampledRun> runs;
          for (auto& t : client.fetch_samples(prompt, text, options.n_samples, options.sampling)) {
            const auto parsed = parse_label_text(t);
            runs.push_back({std::move(t), parsed});
          }
          rec.runs = std::move(runs);
        }
        records[i] = std::move(rec);
      } catch (const PartialCollectionError& e) {
        failures[i] = Failure{pitch.id, e.what(), e.missing()};
        status = "failed";
      } catch (const Error& e) {
        failures[i] = Failure{pitch.id, e.what(), {}};
        status = "failed";
      }
      if (!options.out_dir.empty()) {
        std::lock_guard lock(journal_mu);
        journal += json({{"pitch_id", pitch.id}, {"status", status}}).dump() + "\n";
        io::write_file_atomic(journal_path, journal);
      }
    }
  };
  const std::size_t workers = std::min(client.endpoint().max_concurrent, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  CollectResult result;
  result.predictions.header = {{"evaluator_id", evaluator},
                               {"model", client.endpoint().model_name},
                               {"base_url", client.endpoint().base_url},
                               {"mode", options.mode == CollectMode::kLogprob ? "logprob" : "sampled"},
                               {"prompt_asset", options.prompt_asset},
                               {"prompt_sha256", io::sha256_hex(prompt)},
                               {"text_field", options.use_short_text ? "text_short" : "text_full"},
                               {"n_samples", options.mode == CollectMode::kSampled ? json(options.n_samples) : json(1)},
                               {"sampling", to_json(options.sampling)},
                               {"benchmark_id", bench.id}};
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i]) result.predictions.records.push_back(std::move(*records[i]));
    if (failures[i]) result.failures.push_back(std::move(*failures[i]));
  }
  const ClientStats after = client.stats();
  result.stats = {after.network_calls - before.network_calls, after.cache_hits - before.cache_hits,
                  after.retries - before.retries};

  if (!options.out_dir.empty()) {
    if (!result.predictions.records.empty()) {
      io::write_file_atomic(options.out_dir / "predictions.jsonl", serialize_predictions(result.predictions));
    }
    json f = json::array();
    for (const auto& fl : result.failures) {
      f.push_back({{"pitch_id", fl.pitch_id}, {"error", fl.error}, {"missing_samples", fl.missing_samples}});
    }
    io::write_file_atomic(options.out_dir / "failures.json", f.dump(2) + "\n");
  }
  return result;
}

}  // namespace tierbench::collect
