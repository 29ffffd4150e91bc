#include <thread>

#include <httplib.h>

#include "tierbench/collect.hpp"
#include "tierbench/error.hpp"

namespace tierbench::collect {

HttpResponse HttpTransport::post(const HttpRequest& request) {
  httplib::Client cli(request.base_url);
  const auto timeout = std::chrono::duration<double>(request.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  cli.set_connection_timeout(sec.count(), usec.count());
  cli.set_read_timeout(sec.count(), usec.count());
  cli.set_write_timeout(sec.count(), usec.count());
  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (k == "Content-Type") {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }
  auto res = cli.Post(request.path, headers, request.body, content_type);
  if (!res) {
    throw Error(ErrorCode::kTransportError, request.base_url + request.path + ": " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

MockTransport::MockTransport(Responder responder, std::chrono::microseconds latency)
    : responder_(std::move(responder)), latency_(latency) {}

HttpResponse MockTransport::post(const HttpRequest& request) {
  const std::size_t now_in_flight = ++in_flight_;
  std::size_t seen = max_in_flight_.load();
  while (now_in_flight > seen && !max_in_flight_.compare_exchange_weak(seen, now_in_flight)) {
  }
  Call call;
  call.body = request.body;
  call.issued_at = request.issued_at;
  call.received_at = Clock::now();
  call.in_flight = now_in_flight;
  Responder responder;
  {
    std::lock_guard lock(mu_);
    call.index = calls_.size();
    calls_.push_back(call);
    responder = responder_;
  }
  struct Leave {
    std::atomic<std::size_t>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return responder(request, call.index);
}

std::vector<MockTransport::Call> MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t MockTransport::call_count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

void MockTransport::set_responder(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
}

void MockTransport::reset_log() {
  std::lock_guard lock(mu_);
  calls_.clear();
  max_in_flight_ = 0;
}

std::string logprob_response_body(const std::vector<std::pair<std::string, double>>& top_tokens) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& [token, lp] : top_tokens) top.push_back({{"token", token}, {"logprob", lp}});
  const std::string first = top_tokens.empty() ? "" : top_tokens.front().first;
  const double first_lp = top_tokens.empty() ? 0.0 : top_tokens.front().second;
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"token", first}, {"logprob", first_lp}, {"top_logprobs", top}});
  nlohmann::json choice = {{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", first}}},
                           {"logprobs", {{"content", content}}},
                           {"finish_reason", "length"}};
  return nlohmann::json({{"object", "chat.completion"}, {"choices", {choice}}}).dump();
}

std::string completion_response_body(const std::string& text) {
  nlohmann::json choice = {
      {"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}};
  return nlohmann::json({{"object", "chat.completion"}, {"choices", {choice}}}).dump();
}

}  // namespace tierbench::collect
