#pragma once

#include <string>
#include <vector>

#include "hypospec/config.hpp"

namespace hypospec::harness {

/// Built-in scenarios, in listing order.
const std::vector<ScenarioDef>& registry();
/// Throws ConfigError for unknown ids.
const ScenarioDef& find_scenario(const std::string& id);
/// One line per entry: id, chart, Q_L, tau_L, coefficient kind, description.
std::string registry_listing();

}  // namespace hypospec::harness
