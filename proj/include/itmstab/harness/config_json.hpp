#pragma once

#include <json.hpp>

#include "itmstab/harness/harness.hpp"

namespace itmstab::harness {

/// Missing fields keep their defaults. Unknown fields and wrong types throw
/// ConfigError naming the field path, e.g. "grounds[1].conductivity".
SweepConfig config_from_json(const nlohmann::json& j);

/// Every field, defaults included.
nlohmann::json config_to_json(const SweepConfig& config);

std::string to_string(itm::Polarization p);
std::string to_string(itm::VariabilityMode m);

}  // namespace itmstab::harness
