#include "tierbench/assets.hpp"

#include <map>

#include "tierbench/error.hpp"

namespace tierbench {

namespace detail {
const std::map<std::string, std::string_view, std::less<>>& embedded_assets();
}

std::string_view asset_text(std::string_view asset_name) {
  const auto& assets = detail::embedded_assets();
  auto it = assets.find(asset_name);
  if (it == assets.end()) throw Error(ErrorCode::kIoError, "no bundled asset '" + std::string(asset_name) + "'");
  return it->second;
}

std::vector<std::string> asset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : detail::embedded_assets()) names.push_back(k);
  return names;
}

std::string_view prompt_text(std::string_view prompt_name) {
  return asset_text("prompts/" + std::string(prompt_name) + ".txt");
}

}  // namespace tierbench
