#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tierbench {

// Text shipped with the library: "journals.csv" and "prompts/<name>.txt".
std::string_view asset_text(std::string_view asset_name);
std::vector<std::string> asset_names();

// Evaluation prompts by short name: expert, simplified, journal_anchored, economics.
std::string_view prompt_text(std::string_view prompt_name);

}  // namespace tierbench
