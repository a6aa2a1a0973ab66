#include "planekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "planekit/error.hpp"
#include "planekit/random.hpp"

namespace planekit {

namespace {

constexpr int kLayoutAttempts = 64;
constexpr int kRelaxationSteps = 2;
constexpr int kPlaneAttempts = 400;
constexpr double kMaxTiltDeg = 60.0;
// Minimum cosine between a pixel ray and the plane normal; keeps every
// surface at most ~75° from facing the camera.
constexpr double kMinIncidenceCos = 0.25;

struct Site {
  double u = 0.0;
  double v = 0.0;
};

std::vector<std::int32_t> voronoi_labels(const std::vector<Site>& sites, int width, int height) {
  std::vector<std::int32_t> labels(static_cast<std::size_t>(width) * height);
  std::size_t i = 0;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u, ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::int32_t arg = 0;
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const double du = u - sites[s].u;
        const double dv = v - sites[s].v;
        const double d2 = du * du + dv * dv;
        if (d2 < best) {
          best = d2;
          arg = static_cast<std::int32_t>(s);
        }
      }
      labels[i] = arg;
    }
  }
  return labels;
}

double standard_normal(Rng& rng) {
  // Box-Muller on our own uniform draws, so noise reproduces across
  // standard library implementations.
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void SceneSpec::validate() const {
  if (plane_count < 1 || plane_count > 64) {
    throw Error(ErrorKind::kConfiguration, "plane_count must be in [1, 64]");
  }
  if (!(depth_min > 0.0) || !(depth_max > depth_min)) {
    throw Error(ErrorKind::kConfiguration, "depth range must satisfy 0 < min < max");
  }
  if (!(noise_sigma >= 0.0)) {
    throw Error(ErrorKind::kConfiguration, "noise_sigma must be nonnegative");
  }
}

SyntheticScene synth_scene(const SceneSpec& spec, const CameraIntrinsics& camera) {
  spec.validate();
  camera.validate();
  const int width = camera.width;
  const int height = camera.height;
  const std::size_t pixel_count = camera.pixel_count();
  const auto count = static_cast<std::size_t>(spec.plane_count);
  if (pixel_count < count * 3) {
    throw Error(ErrorKind::kGeneration, "image too small for the requested plane count");
  }

  Rng layout_rng(derive_seed(spec.seed, 0));
  Rng plane_rng(derive_seed(spec.seed, 1));
  Rng noise_rng(derive_seed(spec.seed, 2));

  // Layout: relaxed Voronoi cells, rejecting layouts with a sliver cell.
  std::vector<std::int32_t> labels;
  std::vector<std::size_t> sizes;
  const std::size_t min_cell = std::max<std::size_t>(3, pixel_count / (8 * count));
  bool laid_out = false;
  for (int attempt = 0; attempt < kLayoutAttempts && !laid_out; ++attempt) {
    std::vector<Site> sites(count);
    for (Site& s : sites) {
      s.u = uniform_unit(layout_rng) * width;
      s.v = uniform_unit(layout_rng) * height;
    }
    for (int step = 0; step <= kRelaxationSteps; ++step) {
      labels = voronoi_labels(sites, width, height);
      if (step == kRelaxationSteps) break;
      std::vector<double> su(count, 0.0), sv(count, 0.0), n(count, 0.0);
      std::size_t i = 0;
      for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u, ++i) {
          su[labels[i]] += u;
          sv[labels[i]] += v;
          n[labels[i]] += 1.0;
        }
      }
      for (std::size_t s = 0; s < count; ++s) {
        if (n[s] > 0.0) sites[s] = {su[s] / n[s], sv[s] / n[s]};
      }
    }
    sizes.assign(count, 0);
    for (std::int32_t l : labels) ++sizes[l];
    laid_out = *std::min_element(sizes.begin(), sizes.end()) >= min_cell;
  }
  if (!laid_out) {
    throw Error(ErrorKind::kGeneration, "could not partition the image into usable cells");
  }

  std::vector<PixelMask> regions(count);
  for (std::size_t s = 0; s < count; ++s) regions[s].indices.reserve(sizes[s]);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    regions[labels[i]].indices.push_back(static_cast<std::uint32_t>(i));
  }

  SyntheticScene scene;
  scene.depth = DepthMap(width, height);
  scene.segmentation.ids = Raster<std::int32_t>(width, height, 0);
  scene.ground_truth.camera = camera;

  const auto w = static_cast<std::uint32_t>(width);
  for (std::size_t s = 0; s < count; ++s) {
    const PixelMask& region = regions[s];
    double cu = 0.0, cv = 0.0;
    for (std::uint32_t i : region.indices) {
      cu += i % w;
      cv += i / w;
    }
    cu /= static_cast<double>(region.size());
    cv /= static_cast<double>(region.size());
    const Eigen::Vector3d center_ray = camera.ray(cu, cv);

    std::optional<Plane> chosen;
    double tilt_scale = 1.0;
    for (int attempt = 0; attempt < kPlaneAttempts && !chosen; ++attempt) {
      if (attempt > 0 && attempt % 40 == 0) tilt_scale *= 0.7;
      Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
      if (!spec.fronto_parallel) {
        const double tilt = kMaxTiltDeg * std::numbers::pi / 180.0 * tilt_scale *
                            uniform_unit(plane_rng);
        const double azimuth = 2.0 * std::numbers::pi * uniform_unit(plane_rng);
        n = {std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth),
             std::cos(tilt)};
      }
      const double anchor_depth =
          spec.depth_min + (spec.depth_max - spec.depth_min) * (0.1 + 0.8 * uniform_unit(plane_rng));
      const double offset = anchor_depth * n.dot(center_ray);
      if (!(offset > 0.0)) continue;
      const Plane candidate = Plane::canonical(n, offset);

      bool ok = true;
      for (std::uint32_t i : region.indices) {
        const Eigen::Vector3d ray = camera.ray(i % w, i / w);
        if (candidate.normal().dot(ray) < kMinIncidenceCos * ray.norm()) {
          ok = false;
          break;
        }
        const double z = candidate.depth_along(ray);
        if (!(z >= spec.depth_min && z <= spec.depth_max)) {
          ok = false;
          break;
        }
      }
      if (ok) chosen = candidate;
    }
    if (!chosen) {
      throw Error(ErrorKind::kGeneration, "no plane placement fits the depth range");
    }

    const auto instance_id = static_cast<std::int32_t>(s + 1);
    const DepthMap rendered = render_planar_depth(*chosen, region, camera);
    double depth_sum = 0.0;
    for (std::uint32_t i : region.indices) {
      const double z = rendered.values[i];
      depth_sum += z;
      double noisy = z;
      if (spec.noise_sigma > 0.0) noisy = z * (1.0 + spec.noise_sigma * standard_normal(noise_rng));
      if (noisy > 0.0) {
        scene.depth.set(i, noisy);
      } else {
        scene.depth.invalidate(i);
      }
      scene.segmentation.ids[i] = instance_id;
    }
    scene.segmentation.classes[instance_id] = spec.semantic_class;
    scene.planes.emplace_back(instance_id, *chosen);

    PlaneInstance truth;
    truth.plane = *chosen;
    truth.mask = region;
    truth.inlier_count = region.size();
    truth.mean_fit_error = 0.0;
    truth.mean_depth = depth_sum / static_cast<double>(region.size());
    truth.instance_id = instance_id;
    truth.semantic_class = spec.semantic_class;
    scene.ground_truth.planes.push_back(std::move(truth));
  }
  return scene;
}

}  // namespace planekit
