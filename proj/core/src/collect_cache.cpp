#include <fstream>
#include <sstream>
#include <system_error>

#include "tierbench/collect.hpp"
#include "tierbench/error.hpp"
#include "tierbench/io.hpp"

namespace tierbench::collect {

namespace fs = std::filesystem;

CacheKey make_cache_key(const EndpointConfig& endpoint, std::string_view mode, std::string_view prompt,
                        std::string_view pitch_text, const SamplingParams& params,
                        std::optional<std::size_t> sample_index) {
  CacheKey key;
  key.fields = {{"base_url", endpoint.base_url},
                {"model", endpoint.model_name},
                {"mode", mode},
                {"prompt", prompt},
                {"pitch_text", pitch_text},
                {"params", to_json(params)},
                {"sample_index", sample_index ? nlohmann::json(*sample_index) : nlohmann::json(nullptr)}};
  // nlohmann objects are key-sorted, so dump() is canonical.
  key.digest = io::sha256_hex(key.fields.dump());
  return key;
}

Cache::Cache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path Cache::path_for(const std::string& digest) const {
  return dir_ / digest.substr(0, 2) / (digest + ".json");
}

std::optional<std::string> Cache::get(const CacheKey& key) const {
  const fs::path path = path_for(key.digest);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto entry = nlohmann::json::parse(buf.str(), nullptr, false);
  if (entry.is_discarded() || !entry.contains("payload") || entry.value("key", nlohmann::json()) != key.fields) {
    throw Error(ErrorCode::kIoError, "corrupt cache entry " + path.string());
  }
  return entry["payload"].get<std::string>();
}

std::string Cache::put(const CacheKey& key, const std::string& payload) {
  const fs::path path = path_for(key.digest);
  std::lock_guard lock(mu_);
  if (auto existing = get(key)) return *existing;
  fs::create_directories(path.parent_path());
  const nlohmann::json entry = {{"key", key.fields}, {"payload", payload}};
  const fs::path tmp = path.string() + ".tmp";
  io::write_file_atomic(tmp, entry.dump());
  // A hard link never replaces an existing file, so a concurrent writer from
  // another process cannot overwrite the first payload.
  std::error_code ec;
  fs::create_hard_link(tmp, path, ec);
  fs::remove(tmp);
  if (ec) {
    if (auto existing = get(key)) return *existing;
    throw Error(ErrorCode::kIoError, "cannot store cache entry " + path.string() + ": " + ec.message());
  }
  return payload;
}

}  // namespace tierbench::collect
