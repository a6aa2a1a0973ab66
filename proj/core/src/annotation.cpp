#include "planekit/annotation.hpp"

#include "planekit/error.hpp"

namespace planekit {

const std::string& InstanceSegmentation::class_of(std::int32_t id) const {
  static const std::string fallback = kDefaultClass;
  const auto it = classes.find(id);
  return it == classes.end() ? fallback : it->second;
}

Raster<std::int32_t> label_raster(const PlaneAnnotation& annotation) {
  Raster<std::int32_t> labels(annotation.width(), annotation.height(), 0);
  for (std::size_t k = 0; k < annotation.planes.size(); ++k) {
    for (std::uint32_t i : annotation.planes[k].mask.indices) {
      if (i >= labels.size()) {
        throw Error(ErrorKind::kFormat, "plane mask lies outside the image");
      }
      if (labels[i] != 0) {
        throw Error(ErrorKind::kFormat, "plane masks overlap");
      }
      labels[i] = static_cast<std::int32_t>(k + 1);
    }
  }
  return labels;
}

DepthMap render_annotation_depth(const PlaneAnnotation& annotation) {
  const CameraIntrinsics& camera = annotation.camera;
  DepthMap out(camera.width, camera.height);
  const auto w = static_cast<std::uint32_t>(camera.width);
  for (const PlaneInstance& plane : annotation.planes) {
    for (std::uint32_t i : plane.mask.indices) {
      const double z = plane.plane.depth_along(
          camera.ray(static_cast<double>(i % w), static_cast<double>(i / w)));
      if (z > 0.0) out.set(i, z);
    }
  }
  return out;
}

NormalMap render_annotation_normals(const PlaneAnnotation& annotation) {
  NormalMap out(annotation.width(), annotation.height());
  for (const PlaneInstance& plane : annotation.planes) {
    for (std::uint32_t i : plane.mask.indices) out.set(i, plane.plane.normal());
  }
  return out;
}

}  // namespace planekit
