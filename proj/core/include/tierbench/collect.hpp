#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/classify.hpp"
#include "tierbench/error.hpp"
#include "tierbench/ingest.hpp"

namespace tierbench::collect {

// PartialCollection carrying which sample indices failed and which succeeded.
class PartialCollectionError : public Error {
 public:
  PartialCollectionError(std::vector<std::size_t> missing, std::vector<std::size_t> succeeded,
                         const std::string& message)
      : Error(ErrorCode::kPartialCollection, message),
        missing_(std::move(missing)),
        succeeded_(std::move(succeeded)) {}

  const std::vector<std::size_t>& missing() const noexcept { return missing_; }
  const std::vector<std::size_t>& succeeded() const noexcept { return succeeded_; }

 private:
  std::vector<std::size_t> missing_;
  std::vector<std::size_t> succeeded_;
};

struct EndpointConfig {
  std::string base_url;
  std::string model_name;
  std::string auth_env_var = "OPENAI_API_KEY";
  std::size_t max_concurrent = 4;
  std::size_t requests_per_minute = 60;
  std::size_t retry_max = 3;
  double timeout_seconds = 60.0;
  double backoff_base_seconds = 1.0;
  double backoff_max_seconds = 30.0;
};

void validate(const EndpointConfig& e);
EndpointConfig endpoint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EndpointConfig& e);

// Sampling parameters sent with every request. Unset fields fall back to the
// endpoint's defaults and are recorded as null.
struct SamplingParams {
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<int> max_tokens;
  std::optional<std::uint64_t> seed;
};
nlohmann::json to_json(const SamplingParams& p);
SamplingParams sampling_from_json(const nlohmann::json& j);

// --- transport ------------------------------------------------------------------

using Clock = std::chrono::steady_clock;

struct HttpRequest {
  std::string base_url;
  std::string path;
  std::map<std::string, std::string> headers;
  std::string body;
  double timeout_seconds = 60.0;
  Clock::time_point issued_at;  // when the rate limiter released the request
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws TransportError when no HTTP response was obtained.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

class HttpTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

// Scripted in-process endpoint. Records every call and the peak number of
// concurrent calls.
class MockTransport final : public Transport {
 public:
  struct Call {
    std::size_t index = 0;
    std::string body;
    Clock::time_point issued_at;
    Clock::time_point received_at;
    std::size_t in_flight = 0;  // including this call
  };
  // May throw Error(kTransportError) to simulate a network failure.
  using Responder = std::function<HttpResponse(const HttpRequest&, std::size_t call_index)>;

  explicit MockTransport(Responder responder, std::chrono::microseconds latency = std::chrono::microseconds(0));

  HttpResponse post(const HttpRequest& request) override;

  std::vector<Call> calls() const;
  std::size_t call_count() const;
  std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }
  void set_responder(Responder responder);
  void reset_log();

 private:
  Responder responder_;
  std::chrono::microseconds latency_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

// Canned chat-completions payloads for scripting the mock.
std::string logprob_response_body(const std::vector<std::pair<std::string, double>>& top_tokens);
std::string completion_response_body(const std::string& text);

// --- cache --------------------------------------------------------------------

// Canonical JSON of everything that determines a response, and its SHA-256.
struct CacheKey {
  nlohmann::json fields;
  std::string digest;
};

CacheKey make_cache_key(const EndpointConfig& endpoint, std::string_view mode, std::string_view prompt,
                        std::string_view pitch_text, const SamplingParams& params,
                        std::optional<std::size_t> sample_index);

// Content-addressed store: one file per digest, written via temp file and
// rename. The first payload stored under a digest wins.
class Cache {
 public:
  explicit Cache(std::filesystem::path dir);
  std::optional<std::string> get(const CacheKey& key) const;
  // Returns the payload now on disk (the earlier one if the key existed).
  std::string put(const CacheKey& key, const std::string& payload);
  std::filesystem::path path_for(const std::string& digest) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

// --- client ---------------------------------------------------------------------

// Keeps at least 60 / requests_per_minute seconds between releases.
class RateLimiter {
 public:
  explicit RateLimiter(std::size_t requests_per_minute);
  Clock::time_point acquire();

 private:
  std::mutex mu_;
  Clock::duration spacing_;
  std::optional<Clock::time_point> last_;
};

// Matches raw candidate tokens to tiers: a token (whitespace stripped,
// lowercased) maps to the unique tier whose name it prefixes. Duplicates keep
// the highest log-probability. Throws NoLabelTokens when nothing matches.
LabelLogprobs match_label_tokens(const std::vector<std::pair<std::string, double>>& candidates);

struct ClientStats {
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

class Client {
 public:
  Client(EndpointConfig endpoint, std::shared_ptr<Transport> transport, std::shared_ptr<Cache> cache,
         std::uint64_t jitter_seed = 0);

  LabelLogprobs fetch_logprobs(const std::string& prompt, const std::string& pitch_text,
                               const SamplingParams& params = {});
  // Exactly n texts in index order. Throws PartialCollection listing the
  // missing indices when some samples fail after retries.
  std::vector<std::string> fetch_samples(const std::string& prompt, const std::string& pitch_text, std::size_t n,
                                         const SamplingParams& params = {});

  ClientStats stats() const;
  const EndpointConfig& endpoint() const noexcept { return endpoint_; }

 private:
  std::string request(const CacheKey& key, const nlohmann::json& body);
  HttpResponse send_with_retry(const nlohmann::json& body);
  std::string api_key() const;

  EndpointConfig endpoint_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Cache> cache_;
  RateLimiter limiter_;
  std::uint64_t jitter_seed_;
  std::atomic<std::uint64_t> jitter_counter_{0};

  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  std::size_t slots_in_use_ = 0;

  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

enum class CollectMode { kLogprob, kSampled };

struct CollectOptions {
  CollectMode mode = CollectMode::kLogprob;
  std::string prompt_asset = "expert";  // prompts/<name>.txt
  std::string evaluator_id;             // defaults to the model name
  std::size_t n_samples = 8;
  SamplingParams sampling;
  bool use_short_text = false;
  std::filesystem::path out_dir;  // predictions.jsonl, progress.jsonl, failures.json
};

struct Failure {
  std::string pitch_id;
  std::string error;
  std::vector<std::size_t> missing_samples;
};

struct CollectResult {
  PredictionFile predictions;
  std::vector<Failure> failures;
  ClientStats stats;
};

// One record per pitch in benchmark order. Per-pitch errors become failures
// rather than aborting the run; reruns are served from the cache.
CollectResult collect_benchmark(Client& client, const BenchmarkSet& bench, const CollectOptions& options);

}  // namespace tierbench::collect
