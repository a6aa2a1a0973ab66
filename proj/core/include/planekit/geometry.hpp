#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "planekit/raster.hpp"

namespace planekit {

// Rays with n·K⁻¹q at or below this are treated as parallel to (or facing
// away from) a plane and produce no depth.
inline constexpr double kRayEpsilon = 1e-6;

// Pinhole intrinsics. Pixel (u, v) has homogeneous coordinate q = (u, v, 1).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Throws Error(kConfiguration) when an invariant is violated.
  void validate() const;

  // K⁻¹q, the ray through pixel (u, v) with unit z component.
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
  Eigen::Vector2d project(const Eigen::Vector3d& point) const {
    return {fx * point.x() / point.z() + cx, fy * point.y() / point.z() + cy};
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Per-pixel z-depth in meters with an explicit validity plane.
struct DepthMap {
  Raster<double> values;
  Raster<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int width, int height) : values(width, height, 0.0), valid(width, height, 0) {}

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
  bool is_valid(std::size_t i) const { return valid[i] != 0; }
  bool is_valid(int u, int v) const { return valid(u, v) != 0; }
  void set(std::size_t i, double z) {
    values[i] = z;
    valid[i] = 1;
  }
  void set(int u, int v, double z) { set(values.index(u, v), z); }
  void invalidate(std::size_t i) {
    values[i] = 0.0;
    valid[i] = 0;
  }
  std::size_t valid_count() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

struct NormalMap {
  Raster<Eigen::Vector3d> values;
  Raster<std::uint8_t> valid;

  NormalMap() = default;
  NormalMap(int width, int height)
      : values(width, height, Eigen::Vector3d::Zero()), valid(width, height, 0) {}

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
  bool is_valid(std::size_t i) const { return valid[i] != 0; }
  // Stores the normalized direction.
  void set(std::size_t i, const Eigen::Vector3d& n);
};

// Plane nᵀX = d in camera coordinates, stored canonically: unit normal and
// strictly positive offset.
class Plane {
 public:
  Plane() = default;

  // Normalizes (normal, offset) jointly and flips the sign so the offset is
  // positive. Throws Error(kDegenerateSample) for a zero or non-finite normal
  // or a plane through the camera center.
  static Plane canonical(const Eigen::Vector3d& normal, double offset);
  // Stores already-canonical parameters verbatim (for lossless reloading).
  // Throws Error(kDomain) unless the normal is unit within `tolerance` and
  // the offset is positive.
  static Plane from_canonical(const Eigen::Vector3d& normal, double offset,
                              double tolerance = 1e-6);

  const Eigen::Vector3d& normal() const noexcept { return normal_; }
  double offset() const noexcept { return offset_; }

  double signed_distance(const Eigen::Vector3d& point) const {
    return normal_.dot(point) - offset_;
  }
  double distance(const Eigen::Vector3d& point) const;

  // Depth along the ray K⁻¹q, or a non-positive value when the ray misses.
  double depth_along(const Eigen::Vector3d& ray) const;

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  Plane(const Eigen::Vector3d& normal, double offset) : normal_(normal), offset_(offset) {}

  Eigen::Vector3d normal_ = Eigen::Vector3d::UnitZ();
  double offset_ = 1.0;
};

// Angle between two plane normals in radians, in [0, π].
double normal_angle(const Plane& a, const Plane& b);

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Pixel> source_pixels;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  void reserve(std::size_t n) {
    points.reserve(n);
    source_pixels.reserve(n);
  }
  void push_back(const Eigen::Vector3d& p, Pixel px) {
    points.push_back(p);
    source_pixels.push_back(px);
  }
};

// Lifts every valid pixel (row-major order) to X = z·K⁻¹q.
PointCloud backproject(const DepthMap& depth, const CameraIntrinsics& camera);
// Same, restricted to the pixels of `mask`.
PointCloud backproject(const DepthMap& depth, const CameraIntrinsics& camera,
                       const PixelMask& mask);

DepthMap render_planar_depth(const Plane& plane, const PixelMask& mask,
                             const CameraIntrinsics& camera);
DepthMap render_planar_depth(const Plane& plane, const CameraIntrinsics& camera);

Plane plane_from_three_points(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                              const Eigen::Vector3d& p2);

// Total least squares: the plane through the centroid whose normal is the
// scatter matrix's smallest principal direction.
Plane fit_plane_lsq(const std::vector<Eigen::Vector3d>& points);
inline Plane fit_plane_lsq(const PointCloud& cloud) { return fit_plane_lsq(cloud.points); }

std::vector<double> point_plane_residuals(const Plane& plane,
                                          const std::vector<Eigen::Vector3d>& points);

}  // namespace planekit
