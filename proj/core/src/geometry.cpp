#include "planekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "planekit/error.hpp"

namespace planekit {

namespace {

// Offsets below this are treated as planes through the camera center.
constexpr double kMinOffset = 1e-12;
constexpr double kMinCrossNorm = 1e-12;

void check_mask(const PixelMask& mask, std::size_t pixel_count) {
  if (!mask.empty() && mask.indices.back() >= pixel_count) {
    throw Error(ErrorKind::kConfiguration, "mask pixel lies outside the image");
  }
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kDegenerateSample: return "degenerate sample";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDecode: return "decode error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kGeneration: return "generation error";
  }
  return "error";
}

void PixelMask::normalize() {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
}

PixelMask PixelMask::from_pixels(const std::vector<Pixel>& pixels, int width) {
  PixelMask mask;
  mask.indices.reserve(pixels.size());
  for (const Pixel& p : pixels) {
    mask.indices.push_back(static_cast<std::uint32_t>(p.v) * static_cast<std::uint32_t>(width) +
                           static_cast<std::uint32_t>(p.u));
  }
  mask.normalize();
  return mask;
}

std::vector<Pixel> PixelMask::pixels(int width) const {
  std::vector<Pixel> out;
  out.reserve(indices.size());
  const auto w = static_cast<std::uint32_t>(width);
  for (std::uint32_t i : indices) {
    out.push_back({static_cast<int>(i % w), static_cast<int>(i / w)});
  }
  return out;
}

std::size_t intersection_size(const PixelMask& a, const PixelMask& b) {
  std::size_t count = 0;
  auto ia = a.indices.begin();
  auto ib = b.indices.begin();
  while (ia != a.indices.end() && ib != b.indices.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

PixelMask mask_union(const PixelMask& a, const PixelMask& b) {
  PixelMask out;
  out.indices.reserve(a.size() + b.size());
  std::set_union(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(),
                 std::back_inserter(out.indices));
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorKind::kConfiguration, "focal lengths must be positive and finite");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kConfiguration, "image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorKind::kConfiguration, "principal point must lie inside the image");
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.data().begin(), valid.data().end(), 1));
}

void NormalMap::set(std::size_t i, const Eigen::Vector3d& n) {
  values[i] = n.normalized();
  valid[i] = 1;
}

Plane Plane::canonical(const Eigen::Vector3d& normal, double offset) {
  const double norm = normal.norm();
  if (!std::isfinite(norm) || !std::isfinite(offset) || norm < kMinCrossNorm) {
    throw Error(ErrorKind::kDegenerateSample, "plane normal is zero or not finite");
  }
  Eigen::Vector3d n = normal / norm;
  double d = offset / norm;
  if (std::abs(d) < kMinOffset) {
    throw Error(ErrorKind::kDegenerateSample, "plane passes through the camera center");
  }
  if (d < 0.0) {
    n = -n;
    d = -d;
  }
  return Plane(n, d);
}

Plane Plane::from_canonical(const Eigen::Vector3d& normal, double offset, double tolerance) {
  if (!normal.allFinite() || !(std::abs(normal.norm() - 1.0) <= tolerance)) {
    throw Error(ErrorKind::kDomain, "stored plane normal is not unit length");
  }
  if (!(offset > 0.0) || !std::isfinite(offset)) {
    throw Error(ErrorKind::kDomain, "stored plane offset must be positive");
  }
  return Plane(normal, offset);
}

double Plane::distance(const Eigen::Vector3d& point) const {
  return std::abs(signed_distance(point));
}

double Plane::depth_along(const Eigen::Vector3d& ray) const {
  const double denom = normal_.dot(ray);
  if (denom <= kRayEpsilon) return -1.0;
  return offset_ / denom;
}

double normal_angle(const Plane& a, const Plane& b) {
  // atan2 form stays accurate near 0 and π where acos loses precision.
  const double cross = a.normal().cross(b.normal()).norm();
  const double dot = a.normal().dot(b.normal());
  return std::atan2(cross, dot);
}

PointCloud backproject(const DepthMap& depth, const CameraIntrinsics& camera) {
  if (depth.width() != camera.width || depth.height() != camera.height) {
    throw Error(ErrorKind::kConfiguration, "depth map size does not match the camera");
  }
  PointCloud cloud;
  cloud.reserve(depth.valid_count());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.is_valid(u, v)) continue;
      cloud.push_back(depth.values(u, v) * camera.ray(u, v), {u, v});
    }
  }
  return cloud;
}

PointCloud backproject(const DepthMap& depth, const CameraIntrinsics& camera,
                       const PixelMask& mask) {
  if (depth.width() != camera.width || depth.height() != camera.height) {
    throw Error(ErrorKind::kConfiguration, "depth map size does not match the camera");
  }
  check_mask(mask, camera.pixel_count());
  PointCloud cloud;
  cloud.reserve(mask.size());
  const auto w = static_cast<std::uint32_t>(camera.width);
  for (std::uint32_t i : mask.indices) {
    if (!depth.is_valid(i)) continue;
    const int u = static_cast<int>(i % w);
    const int v = static_cast<int>(i / w);
    cloud.push_back(depth.values[i] * camera.ray(u, v), {u, v});
  }
  return cloud;
}

DepthMap render_planar_depth(const Plane& plane, const PixelMask& mask,
                             const CameraIntrinsics& camera) {
  check_mask(mask, camera.pixel_count());
  DepthMap out(camera.width, camera.height);
  const auto w = static_cast<std::uint32_t>(camera.width);
  for (std::uint32_t i : mask.indices) {
    const double z = plane.depth_along(
        camera.ray(static_cast<double>(i % w), static_cast<double>(i / w)));
    if (z > 0.0 && std::isfinite(z)) out.set(i, z);
  }
  return out;
}

DepthMap render_planar_depth(const Plane& plane, const CameraIntrinsics& camera) {
  DepthMap out(camera.width, camera.height);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const double z = plane.depth_along(camera.ray(u, v));
      if (z > 0.0 && std::isfinite(z)) out.set(u, v, z);
    }
  }
  return out;
}

Plane plane_from_three_points(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                              const Eigen::Vector3d& p2) {
  const Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
  const double norm = n.norm();
  if (!(norm >= kMinCrossNorm)) {
    throw Error(ErrorKind::kDegenerateSample, "sample points are collinear");
  }
  const Eigen::Vector3d unit = n / norm;
  // Averaging over the three points keeps |nᵀpᵢ − d| symmetric.
  const double d = (unit.dot(p0) + unit.dot(p1) + unit.dot(p2)) / 3.0;
  return Plane::canonical(unit, d);
}

Plane fit_plane_lsq(const std::vector<Eigen::Vector3d>& points) {
  if (points.size() < 3) {
    throw Error(ErrorKind::kDegenerateSample, "plane fit needs at least 3 points");
  }
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d q = p - centroid;
    scatter.noalias() += q * q.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  const Eigen::Vector3d eigenvalues = solver.eigenvalues();  // ascending
  // The middle eigenvalue vanishes iff the points are collinear.
  if (!(eigenvalues(1) > 1e-12 * std::max(eigenvalues(2), 1e-300))) {
    throw Error(ErrorKind::kDegenerateSample, "points are collinear or coincident");
  }
  const Eigen::Vector3d normal = solver.eigenvectors().col(0);
  return Plane::canonical(normal, normal.dot(centroid));
}

std::vector<double> point_plane_residuals(const Plane& plane,
                                          const std::vector<Eigen::Vector3d>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(plane.distance(p));
  return out;
}

}  // namespace planekit
