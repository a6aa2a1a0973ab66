#include "planekit/config.hpp"

#include <functional>
#include <map>

#include <nlohmann/json.hpp>

#include "planekit/dataset_io.hpp"
#include "planekit/error.hpp"

namespace planekit {

using nlohmann::json;

namespace {

template <typename T>
using FieldMap = std::map<std::string, std::function<void(T&, const json&)>>;

template <typename T, typename V>
std::function<void(T&, const json&)> field(V T::*member) {
  return [member](T& target, const json& value) { target.*member = value.get<V>(); };
}

// Applies the keys of `section` through `fields`; unknown keys are errors so
// typos do not silently fall back to defaults.
template <typename T>
void apply_section(T& target, const json& section, const FieldMap<T>& fields, const char* name) {
  if (!section.is_object()) {
    throw Error(ErrorKind::kConfiguration, std::string("section \"") + name + "\" must be an object");
  }
  for (const auto& [key, value] : section.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw Error(ErrorKind::kConfiguration,
                  std::string("unknown key \"") + key + "\" in section \"" + name + "\"");
    }
    it->second(target, value);
  }
}

const FieldMap<FittingConfig>& fitting_fields() {
  static const FieldMap<FittingConfig> fields = {
      {"ransac_iterations", field(&FittingConfig::ransac_iterations)},
      {"reference_error", field(&FittingConfig::reference_error)},
      {"reference_depth", field(&FittingConfig::reference_depth)},
      {"min_plane_pixels", field(&FittingConfig::min_plane_pixels)},
      {"min_inlier_ratio", field(&FittingConfig::min_inlier_ratio)},
      {"merge_angle_tol_deg", field(&FittingConfig::merge_angle_tol_deg)},
      {"merge_offset_rel_tol", field(&FittingConfig::merge_offset_rel_tol)},
      {"adaptive_scoring", field(&FittingConfig::adaptive_scoring)},
      {"seed", field(&FittingConfig::seed)},
  };
  return fields;
}

const FieldMap<LossWeights>& weight_fields() {
  static const FieldMap<LossWeights> fields = {
      {"classification", field(&LossWeights::classification)},
      {"mask", field(&LossWeights::mask)},
      {"normal_class", field(&LossWeights::normal_class)},
      {"normal_residual", field(&LossWeights::normal_residual)},
      {"offset_class", field(&LossWeights::offset_class)},
      {"offset_residual", field(&LossWeights::offset_residual)},
      {"pixel_depth", field(&LossWeights::pixel_depth)},
      {"pixel_normal_l1", field(&LossWeights::pixel_normal_l1)},
      {"pixel_normal_cos", field(&LossWeights::pixel_normal_cos)},
  };
  return fields;
}

PlaneCountRange range_from_json(const json& value, const std::string& name) {
  if (!value.is_array() || value.size() != 2) {
    throw Error(ErrorKind::kConfiguration, "range for \"" + name + "\" must be [min, max]");
  }
  return {value[0].get<int>(), value[1].get<int>()};
}

void validate_weights(const LossWeights& w) {
  for (double v : {w.classification, w.mask, w.normal_class, w.normal_residual, w.offset_class,
                   w.offset_residual, w.pixel_depth, w.pixel_normal_l1, w.pixel_normal_cos}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kConfiguration, "loss weights must be non-negative and finite");
    }
  }
}

}  // namespace

ToolConfig parse_config(const std::string& json_text) {
  ToolConfig config;
  try {
    const json root = json::parse(json_text);
    if (!root.is_object()) throw Error(ErrorKind::kConfiguration, "config must be a JSON object");
    for (const auto& [key, value] : root.items()) {
      if (key == "fitting") {
        apply_section(config.fitting, value, fitting_fields(), "fitting");
      } else if (key == "loss_weights") {
        apply_section(config.loss_weights, value, weight_fields(), "loss_weights");
      } else if (key == "ranges") {
        if (!value.is_object()) {
          throw Error(ErrorKind::kConfiguration, "section \"ranges\" must be an object");
        }
        for (const auto& [name, range] : value.items()) {
          config.ranges.set(name, range_from_json(range, name));
        }
      } else {
        throw Error(ErrorKind::kConfiguration, "unknown config section \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfiguration, std::string("invalid config: ") + e.what());
  }
  config.fitting.validate();
  validate_weights(config.loss_weights);
  return config;
}

ToolConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfiguration, e.what());
  }
  return parse_config(text);
}

std::string config_to_json(const ToolConfig& config) {
  const FittingConfig& f = config.fitting;
  const LossWeights& w = config.loss_weights;
  json ranges = json::object();
  for (const auto& [name, range] : config.ranges.entries()) {
    ranges[name] = {range.min_planes, range.max_planes};
  }
  const PlaneCountRange fallback = config.ranges.default_range();
  ranges[kDefaultClass] = {fallback.min_planes, fallback.max_planes};
  const json root = {
      {"fitting",
       {{"ransac_iterations", f.ransac_iterations},
        {"reference_error", f.reference_error},
        {"reference_depth", f.reference_depth},
        {"min_plane_pixels", f.min_plane_pixels},
        {"min_inlier_ratio", f.min_inlier_ratio},
        {"merge_angle_tol_deg", f.merge_angle_tol_deg},
        {"merge_offset_rel_tol", f.merge_offset_rel_tol},
        {"adaptive_scoring", f.adaptive_scoring},
        {"seed", f.seed}}},
      {"ranges", ranges},
      {"loss_weights",
       {{"classification", w.classification},
        {"mask", w.mask},
        {"normal_class", w.normal_class},
        {"normal_residual", w.normal_residual},
        {"offset_class", w.offset_class},
        {"offset_residual", w.offset_residual},
        {"pixel_depth", w.pixel_depth},
        {"pixel_normal_l1", w.pixel_normal_l1},
        {"pixel_normal_cos", w.pixel_normal_cos}}},
  };
  return root.dump(2) + "\n";
}

}  // namespace planekit
