#pragma once

#include <string>

#include "planekit/losses.hpp"
#include "planekit/plane_fitting.hpp"

namespace planekit {

struct ToolConfig {
  FittingConfig fitting;
  CategoryRangeTable ranges = CategoryRangeTable::defaults();
  LossWeights loss_weights;
};

// JSON with optional sections "fitting", "ranges" and "loss_weights"; keys
// left out keep their defaults. Throws Error(kConfiguration).
ToolConfig load_config(const std::string& path);
ToolConfig parse_config(const std::string& json_text);
std::string config_to_json(const ToolConfig& config);

}  // namespace planekit
