#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planekit/annotation.hpp"
#include "planekit/geometry.hpp"
#include "planekit/random.hpp"

namespace planekit {

struct FittingConfig {
  int ransac_iterations = 200;
  double reference_error = 0.05;  // meters
  double reference_depth = 10.0;  // meters
  std::size_t min_plane_pixels = 200;
  double min_inlier_ratio = 0.10;
  double merge_angle_tol_deg = 10.0;
  double merge_offset_rel_tol = 0.05;
  // Score hypotheses with the depth-adapted threshold. When false, scoring
  // uses reference_error and the adapted threshold only gates acceptance.
  bool adaptive_scoring = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlaneCountRange {
  int min_planes = 0;
  int max_planes = 0;

  friend bool operator==(const PlaneCountRange&, const PlaneCountRange&) = default;
};

class CategoryRangeTable {
 public:
  // The outdoor/indoor priors: road/wall [1,2], building [1,5],
  // vehicle [0,2], floor [0,1], furniture [0,5], default [0,3].
  static CategoryRangeTable defaults();

  CategoryRangeTable() = default;
  explicit CategoryRangeTable(PlaneCountRange fallback) : fallback_(fallback) {}

  void set(const std::string& semantic_class, PlaneCountRange range);
  void set_default(PlaneCountRange range);
  PlaneCountRange range_for(const std::string& semantic_class) const;
  PlaneCountRange default_range() const noexcept { return fallback_; }
  const std::map<std::string, PlaneCountRange>& entries() const noexcept { return ranges_; }

 private:
  std::map<std::string, PlaneCountRange> ranges_;
  PlaneCountRange fallback_{0, 3};
};

// E = max(reference_error · d_m / reference_depth, reference_error).
double adaptive_threshold(double mean_depth, const FittingConfig& cfg);

struct RansacResult {
  Plane plane;
  std::vector<std::size_t> inliers;  // ascending indices into the input cloud
  double mean_fit_error = 0.0;
  double mean_depth = 0.0;
};

// One RANSAC plane proposal. `reference_count` sizes the minimum inlier
// floor (min_inlier_ratio · reference_count); it defaults to points.size().
// Returns nullopt when the best proposal is rejected.
std::optional<RansacResult> ransac_single(const PointCloud& points, const FittingConfig& cfg,
                                          Rng& rng, std::size_t reference_count = 0);

struct InstanceFit {
  std::vector<PlaneInstance> planes;
  bool below_minimum = false;
};

// Sequential extraction: accept a plane, drop its inliers, repeat until the
// range maximum is reached or no proposal survives.
InstanceFit fit_instance(const PointCloud& points, PlaneCountRange range,
                         const FittingConfig& cfg, Rng& rng, int width,
                         std::int32_t instance_id = 0,
                         const std::string& semantic_class = kDefaultClass);

// Fuses adjacent planes of one instance whose parameters agree, refitting
// on the union of their back-projected pixels, until no pair qualifies.
std::vector<PlaneInstance> merge_close_planes(std::vector<PlaneInstance> instances,
                                              const DepthMap& depth,
                                              const CameraIntrinsics& camera,
                                              const FittingConfig& cfg);

// True when some pixel of `a` lies in the 8-neighborhood of `b`.
bool masks_adjacent(const PixelMask& a, const PixelMask& b, int width, int height);

// Whole-image pipeline. `jobs` bounds the number of instances fitted
// concurrently; output does not depend on it.
PlaneAnnotation annotate_image(const DepthMap& depth, const InstanceSegmentation& segmentation,
                               const CameraIntrinsics& camera, const CategoryRangeTable& ranges,
                               const FittingConfig& cfg, int jobs = 1);

}  // namespace planekit
