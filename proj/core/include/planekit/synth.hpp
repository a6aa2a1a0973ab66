#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "planekit/annotation.hpp"
#include "planekit/geometry.hpp"

namespace planekit {

// Parameters for a seeded piecewise-planar test scene.
struct SceneSpec {
  int plane_count = 5;
  double depth_min = 1.0;
  double depth_max = 10.0;
  // Relative (multiplicative) Gaussian depth noise.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  // Forces every plane to face the camera head-on (n = +z).
  bool fronto_parallel = false;
  std::string semantic_class = "wall";

  void validate() const;
};

struct SyntheticScene {
  DepthMap depth;
  InstanceSegmentation segmentation;
  // (instance id, exact plane) per region; region k has instance id k + 1.
  std::vector<std::pair<std::int32_t, Plane>> planes;
  // Exact planes with their full region masks.
  PlaneAnnotation ground_truth;
};

// Partitions the image into Voronoi cells and renders one random plane per
// cell. Throws Error(kGeneration) if no placement fits the depth range.
SyntheticScene synth_scene(const SceneSpec& spec, const CameraIntrinsics& camera);

}  // namespace planekit
