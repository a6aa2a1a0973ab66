#include "planekit/plane_fitting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "planekit/error.hpp"

namespace planekit {

namespace {

struct FitStats {
  double mean_error = 0.0;
  double mean_depth = 0.0;
};

FitStats fit_stats(const Plane& plane, const std::vector<Eigen::Vector3d>& points) {
  FitStats stats;
  for (const auto& p : points) {
    stats.mean_error += plane.distance(p);
    stats.mean_depth += p.z();
  }
  const auto n = static_cast<double>(points.size());
  stats.mean_error /= n;
  stats.mean_depth /= n;
  return stats;
}

// Least squares on the inliers that sit within 3 robust sigmas (1.4826 MAD)
// of the current estimate, repeated a few times. Points of a neighboring
// surface that fall inside E near a crease would otherwise tilt the fit.
Plane refine_plane(const Plane& start, const std::vector<Eigen::Vector3d>& inliers) {
  constexpr double kResidualFloor = 1e-9;
  Plane plane = start;
  std::vector<double> residuals(inliers.size());
  std::vector<Eigen::Vector3d> core;
  for (int round = 0; round < 3; ++round) {
    for (std::size_t i = 0; i < inliers.size(); ++i) residuals[i] = plane.distance(inliers[i]);
    std::vector<double> sorted = residuals;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double cutoff = std::max(3.0 * 1.4826 * *mid, kResidualFloor);
    core.clear();
    for (std::size_t i = 0; i < inliers.size(); ++i) {
      if (residuals[i] <= cutoff) core.push_back(inliers[i]);
    }
    if (core.size() < 3) break;
    try {
      plane = fit_plane_lsq(core);
    } catch (const Error&) {
      break;
    }
  }
  return plane;
}

PointCloud subset(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(cloud.points[i], cloud.source_pixels[i]);
  return out;
}

bool parameters_close(const Plane& a, const Plane& b, const FittingConfig& cfg) {
  const double angle_deg = normal_angle(a, b) * 180.0 / std::numbers::pi;
  if (!(angle_deg < cfg.merge_angle_tol_deg)) return false;
  const double rel = std::abs(a.offset() - b.offset()) / std::max(a.offset(), b.offset());
  return rel < cfg.merge_offset_rel_tol;
}

}  // namespace

void FittingConfig::validate() const {
  if (ransac_iterations < 1 || min_plane_pixels < 1) {
    throw Error(ErrorKind::kConfiguration, "fitting counts must be at least 1");
  }
  if (!(reference_error > 0.0) || !(reference_depth > 0.0) || !(merge_angle_tol_deg > 0.0) ||
      !(merge_offset_rel_tol > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "fitting tolerances must be positive");
  }
  if (!(min_inlier_ratio > 0.0 && min_inlier_ratio <= 1.0)) {
    throw Error(ErrorKind::kConfiguration, "min_inlier_ratio must be in (0, 1]");
  }
}

CategoryRangeTable CategoryRangeTable::defaults() {
  CategoryRangeTable table(PlaneCountRange{0, 3});
  table.set("road", {1, 2});
  table.set("wall", {1, 2});
  table.set("building", {1, 5});
  table.set("vehicle", {0, 2});
  table.set("floor", {0, 1});
  table.set("furniture", {0, 5});
  return table;
}

void CategoryRangeTable::set(const std::string& semantic_class, PlaneCountRange range) {
  if (range.min_planes < 0 || range.min_planes > range.max_planes) {
    throw Error(ErrorKind::kConfiguration,
                "plane range for '" + semantic_class + "' must satisfy 0 <= min <= max");
  }
  if (semantic_class == kDefaultClass) {
    fallback_ = range;
    return;
  }
  ranges_[semantic_class] = range;
}

void CategoryRangeTable::set_default(PlaneCountRange range) { set(kDefaultClass, range); }

PlaneCountRange CategoryRangeTable::range_for(const std::string& semantic_class) const {
  const auto it = ranges_.find(semantic_class);
  return it == ranges_.end() ? fallback_ : it->second;
}

double adaptive_threshold(double mean_depth, const FittingConfig& cfg) {
  if (!(mean_depth > 0.0)) {
    throw Error(ErrorKind::kDomain, "mean depth must be positive");
  }
  return std::max(cfg.reference_error * mean_depth / cfg.reference_depth, cfg.reference_error);
}

std::optional<RansacResult> ransac_single(const PointCloud& points, const FittingConfig& cfg,
                                          Rng& rng, std::size_t reference_count) {
  const std::size_t n = points.size();
  if (n < 3) {
    throw Error(ErrorKind::kDegenerateSample, "RANSAC needs at least 3 points");
  }
  if (reference_count == 0) reference_count = n;
  const auto floor_count = static_cast<std::size_t>(
      std::ceil(cfg.min_inlier_ratio * static_cast<double>(reference_count)));
  const std::size_t min_inliers = std::max<std::size_t>(3, floor_count);

  const auto& pts = points.points;
  std::vector<double> dist(n);
  std::size_t best_count = 0;
  double best_threshold = cfg.reference_error;
  std::optional<Plane> best_plane;

  for (int iter = 0; iter < cfg.ransac_iterations; ++iter) {
    const std::size_t a = uniform_index(rng, n);
    std::size_t b = uniform_index(rng, n - 1);
    if (b >= a) ++b;
    std::size_t c = uniform_index(rng, n - 2);
    if (c >= std::min(a, b)) ++c;
    if (c >= std::max(a, b)) ++c;

    Plane hypothesis;
    try {
      hypothesis = plane_from_three_points(pts[a], pts[b], pts[c]);
    } catch (const Error&) {
      continue;
    }

    const Eigen::Vector3d& normal = hypothesis.normal();
    const double offset = hypothesis.offset();
    double threshold = cfg.reference_error;
    if (cfg.adaptive_scoring) {
      // Seed E from the sample, then recompute it once from the candidate
      // inliers' mean depth.
      const double seed_depth = (pts[a].z() + pts[b].z() + pts[c].z()) / 3.0;
      const double seed_threshold = adaptive_threshold(seed_depth, cfg);
      double depth_sum = 0.0;
      std::size_t candidates = 0;
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::abs(normal.dot(pts[i]) - offset);
        if (dist[i] < seed_threshold) {
          depth_sum += pts[i].z();
          ++candidates;
        }
      }
      if (candidates == 0) continue;
      threshold = adaptive_threshold(depth_sum / static_cast<double>(candidates), cfg);
    } else {
      for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(normal.dot(pts[i]) - offset);
    }

    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += dist[i] < threshold ? 1 : 0;
    if (count > best_count) {
      best_count = count;
      best_threshold = threshold;
      best_plane = hypothesis;
    }
  }

  if (!best_plane || best_count < min_inliers) return std::nullopt;

  RansacResult result;
  result.inliers.reserve(best_count);
  std::vector<Eigen::Vector3d> inlier_points;
  inlier_points.reserve(best_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (best_plane->distance(pts[i]) < best_threshold) {
      result.inliers.push_back(i);
      inlier_points.push_back(pts[i]);
    }
  }
  if (result.inliers.size() < min_inliers) return std::nullopt;

  result.plane = refine_plane(*best_plane, inlier_points);
  const FitStats stats = fit_stats(result.plane, inlier_points);
  result.mean_fit_error = stats.mean_error;
  result.mean_depth = stats.mean_depth;
  if (!(stats.mean_depth > 0.0) ||
      stats.mean_error > adaptive_threshold(stats.mean_depth, cfg)) {
    return std::nullopt;
  }
  return result;
}

InstanceFit fit_instance(const PointCloud& points, PlaneCountRange range,
                         const FittingConfig& cfg, Rng& rng, int width,
                         std::int32_t instance_id, const std::string& semantic_class) {
  InstanceFit fit;
  if (range.max_planes > 0) {
    PointCloud working = points;
    while (static_cast<int>(fit.planes.size()) < range.max_planes && working.size() >= 3) {
      auto result = ransac_single(working, cfg, rng, points.size());
      if (!result) break;

      PlaneInstance instance;
      instance.plane = result->plane;
      instance.inlier_count = result->inliers.size();
      instance.mean_fit_error = result->mean_fit_error;
      instance.mean_depth = result->mean_depth;
      instance.instance_id = instance_id;
      instance.semantic_class = semantic_class;
      std::vector<Pixel> pixels;
      pixels.reserve(result->inliers.size());
      for (std::size_t i : result->inliers) pixels.push_back(working.source_pixels[i]);
      instance.mask = PixelMask::from_pixels(pixels, width);
      fit.planes.push_back(std::move(instance));

      std::vector<std::size_t> keep;
      keep.reserve(working.size() - result->inliers.size());
      auto next_inlier = result->inliers.begin();
      for (std::size_t i = 0; i < working.size(); ++i) {
        if (next_inlier != result->inliers.end() && *next_inlier == i) {
          ++next_inlier;
        } else {
          keep.push_back(i);
        }
      }
      working = subset(working, keep);
    }
  }
  fit.below_minimum = static_cast<int>(fit.planes.size()) < range.min_planes;
  return fit;
}

bool masks_adjacent(const PixelMask& a, const PixelMask& b, int width, int height) {
  const PixelMask& small = a.size() <= b.size() ? a : b;
  const PixelMask& large = a.size() <= b.size() ? b : a;
  if (small.empty()) return false;
  const auto w = static_cast<std::uint32_t>(width);
  for (std::uint32_t i : small.indices) {
    const int u = static_cast<int>(i % w);
    const int v = static_cast<int>(i / w);
    for (int dv = -1; dv <= 1; ++dv) {
      for (int du = -1; du <= 1; ++du) {
        const int nu = u + du;
        const int nv = v + dv;
        if (nu < 0 || nv < 0 || nu >= width || nv >= height) continue;
        const auto j = static_cast<std::uint32_t>(nv) * w + static_cast<std::uint32_t>(nu);
        if (std::binary_search(large.indices.begin(), large.indices.end(), j)) return true;
      }
    }
  }
  return false;
}

std::vector<PlaneInstance> merge_close_planes(std::vector<PlaneInstance> instances,
                                              const DepthMap& depth,
                                              const CameraIntrinsics& camera,
                                              const FittingConfig& cfg) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < instances.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < instances.size() && !changed; ++j) {
        PlaneInstance& first = instances[i];
        const PlaneInstance& second = instances[j];
        if (first.instance_id != second.instance_id) continue;
        if (!parameters_close(first.plane, second.plane, cfg)) continue;
        if (!masks_adjacent(first.mask, second.mask, camera.width, camera.height)) continue;

        PixelMask merged_mask = mask_union(first.mask, second.mask);
        const PointCloud cloud = backproject(depth, camera, merged_mask);
        Plane refit;
        try {
          refit = fit_plane_lsq(cloud);
        } catch (const Error&) {
          continue;
        }
        const FitStats stats = fit_stats(refit, cloud.points);
        // A merge must still pass the acceptance test of a single proposal.
        if (!(stats.mean_depth > 0.0) ||
            stats.mean_error > adaptive_threshold(stats.mean_depth, cfg)) {
          continue;
        }
        first.plane = refit;
        first.mask = std::move(merged_mask);
        first.inlier_count += second.inlier_count;
        first.mean_fit_error = stats.mean_error;
        first.mean_depth = stats.mean_depth;
        instances.erase(instances.begin() + static_cast<std::ptrdiff_t>(j));
        changed = true;
      }
    }
  }
  return instances;
}

PlaneAnnotation annotate_image(const DepthMap& depth, const InstanceSegmentation& segmentation,
                               const CameraIntrinsics& camera, const CategoryRangeTable& ranges,
                               const FittingConfig& cfg, int jobs) {
  camera.validate();
  cfg.validate();
  if (depth.width() != camera.width || depth.height() != camera.height ||
      segmentation.ids.width() != camera.width || segmentation.ids.height() != camera.height) {
    throw Error(ErrorKind::kConfiguration, "depth, segmentation and camera sizes differ");
  }

  PlaneAnnotation annotation;
  annotation.camera = camera;

  // Instance masks in ascending id order.
  std::map<std::int32_t, PixelMask> masks;
  for (std::size_t i = 0; i < segmentation.ids.size(); ++i) {
    const std::int32_t id = segmentation.ids[i];
    if (id > 0) masks[id].indices.push_back(static_cast<std::uint32_t>(i));
  }

  struct Task {
    std::int32_t id;
    const PixelMask* mask;
    std::string semantic_class;
    PlaneCountRange range;
    InstanceFit result;
    std::exception_ptr error;
  };
  std::vector<Task> tasks;
  for (const auto& [id, mask] : masks) {
    const std::string& semantic_class = segmentation.class_of(id);
    const PlaneCountRange range = ranges.range_for(semantic_class);
    if (range.max_planes == 0) continue;
    tasks.push_back({id, &mask, semantic_class, range, {}, nullptr});
  }

  auto run_task = [&](Task& task) {
    try {
      const PointCloud cloud = backproject(depth, camera, *task.mask);
      if (cloud.size() < 3) {
        task.result.below_minimum = task.range.min_planes > 0;
        return;
      }
      // Per-instance streams make the result independent of scheduling.
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(task.id)));
      task.result = fit_instance(cloud, task.range, cfg, rng, camera.width, task.id,
                                 task.semantic_class);
    } catch (...) {
      task.error = std::current_exception();
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), tasks.size());
  if (workers <= 1) {
    for (Task& task : tasks) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(tasks[t]);
      });
    }
  }

  std::vector<PlaneInstance> proposals;
  for (Task& task : tasks) {
    if (task.error) std::rethrow_exception(task.error);
    if (task.result.below_minimum) annotation.underfilled_instances.push_back(task.id);
    for (PlaneInstance& p : task.result.planes) proposals.push_back(std::move(p));
  }

  std::vector<PlaneInstance> merged = merge_close_planes(std::move(proposals), depth, camera, cfg);
  for (PlaneInstance& p : merged) {
    if (p.mask.size() >= cfg.min_plane_pixels) annotation.planes.push_back(std::move(p));
  }
  return annotation;
}

}  // namespace planekit
