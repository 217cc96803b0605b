#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmrmx/harness.hpp"

namespace mmrmx {

// Loads a scenario grid from JSON. Accepts either a single scenario object,
// an array of them, or {"seed": ..., "scenarios": [...]}. Field names mirror
// ScenarioConfig; alpha/tau/beta_base accept a scalar as shorthand for a
// constant vector. Scenarios without their own "seed" get one derived from
// (base seed, scenario index); seed_override replaces the base seed and
// re-derives every scenario seed.
std::vector<ScenarioConfig> load_grid_config(const std::string& json_text,
                                             std::optional<std::uint64_t> seed_override);

std::vector<ScenarioConfig> load_grid_config_file(const std::string& path,
                                                  std::optional<std::uint64_t> seed_override);

}  // namespace mmrmx
