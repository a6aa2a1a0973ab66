#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "planekit/geometry.hpp"
#include "planekit/raster.hpp"

namespace planekit {

inline constexpr const char* kDefaultClass = "default";

// Instance id raster plus class names. Id 0 marks pixels that belong to no
// instance and are never fitted.
struct InstanceSegmentation {
  Raster<std::int32_t> ids;
  std::map<std::int32_t, std::string> classes;

  // Falls back to "default" for ids missing from the table.
  const std::string& class_of(std::int32_t id) const;
};

struct PlaneInstance {
  Plane plane;
  PixelMask mask;
  std::size_t inlier_count = 0;
  double mean_fit_error = 0.0;
  double mean_depth = 0.0;
  std::int32_t instance_id = 0;
  std::string semantic_class = kDefaultClass;
};

// Dense per-image plane labels. Pixels covered by no mask are non-planar.
struct PlaneAnnotation {
  std::vector<PlaneInstance> planes;
  CameraIntrinsics camera;
  // Instances that yielded fewer planes than their category minimum.
  std::vector<std::int32_t> underfilled_instances;

  int width() const noexcept { return camera.width; }
  int height() const noexcept { return camera.height; }
};

// Label raster with 0 for non-planar pixels and k + 1 for plane k. Throws
// Error(kFormat) when masks overlap or leave the image.
Raster<std::int32_t> label_raster(const PlaneAnnotation& annotation);

// Whole-image planar depth: each mask pixel rendered from its own plane.
DepthMap render_annotation_depth(const PlaneAnnotation& annotation);

// Per-pixel plane normals over mask pixels.
NormalMap render_annotation_normals(const PlaneAnnotation& annotation);

}  // namespace planekit
