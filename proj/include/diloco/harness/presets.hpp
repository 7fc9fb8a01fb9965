#pragma once

#include <string_view>
#include <vector>

#include "diloco/harness/config.hpp"

namespace diloco::harness {

std::vector<std::string_view> preset_names();
// Config document of a bundled preset; throws ConfigError for unknown names.
std::string_view preset_text(std::string_view name);
ExperimentConfig load_preset(std::string_view name);

}  // namespace diloco::harness
