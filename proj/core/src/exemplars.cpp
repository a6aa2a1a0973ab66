#include "planekit/exemplars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "planekit/error.hpp"
#include "planekit/kmeans.hpp"
#include "planekit/random.hpp"

namespace planekit {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kMinCenterNorm = 1e-9;

std::vector<double> cluster_1d(const std::vector<double>& values, int k, std::uint64_t seed) {
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) samples(static_cast<Eigen::Index>(i), 0) = values[i];
  const KMeansResult km = kmeans(samples, k, seed);
  std::vector<double> centers(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) centers[c] = km.centers(c, 0);
  return centers;
}

}  // namespace

ExemplarSet::ExemplarSet(std::vector<Eigen::Vector3d> normals, std::vector<double> offsets,
                         double split_threshold, std::uint64_t seed)
    : normals_(std::move(normals)),
      offsets_(std::move(offsets)),
      split_threshold_(split_threshold),
      seed_(seed) {
  if (normals_.empty()) throw Error(ErrorKind::kDomain, "need at least one normal exemplar");
  if (offsets_.size() < 2) throw Error(ErrorKind::kDomain, "need at least two offset exemplars");
  for (const auto& n : normals_) {
    if (!(std::abs(n.norm() - 1.0) <= kUnitTolerance)) {
      throw Error(ErrorKind::kDomain, "normal exemplars must be unit vectors");
    }
  }
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    if (!(offsets_[j] > 0.0) || !std::isfinite(offsets_[j])) {
      throw Error(ErrorKind::kDomain, "offset exemplars must be positive");
    }
    if (j > 0 && !(offsets_[j] > offsets_[j - 1])) {
      throw Error(ErrorKind::kDomain, "offset exemplars must be strictly ascending");
    }
  }
}

std::vector<Eigen::Vector3d> build_normal_exemplars(const std::vector<Eigen::Vector3d>& normals,
                                                    int count, std::uint64_t seed) {
  if (count < 1 || normals.size() < static_cast<std::size_t>(count)) {
    throw Error(ErrorKind::kDomain, "need at least as many normals as exemplars");
  }
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(normals.size()), 3);
  for (std::size_t i = 0; i < normals.size(); ++i) {
    samples.row(static_cast<Eigen::Index>(i)) = normals[i].transpose();
  }
  const KMeansResult km = kmeans(samples, count, seed);

  std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(count));
  std::vector<bool> degenerate(static_cast<std::size_t>(count), false);
  for (int c = 0; c < count; ++c) {
    const Eigen::Vector3d center = km.centers.row(c).transpose();
    if (center.norm() < kMinCenterNorm) {
      degenerate[c] = true;
    } else {
      out[c] = center.normalized();
    }
  }
  // A cluster of antipodal normals averages to zero; replace it with the
  // input normal least aligned with every surviving exemplar.
  for (int c = 0; c < count; ++c) {
    if (!degenerate[c]) continue;
    std::size_t pick = 0;
    double pick_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < normals.size(); ++i) {
      double best_dot = -std::numeric_limits<double>::infinity();
      for (int e = 0; e < count; ++e) {
        if (degenerate[e]) continue;
        best_dot = std::max(best_dot, out[e].dot(normals[i].normalized()));
      }
      if (best_dot < pick_score) {
        pick_score = best_dot;
        pick = i;
      }
    }
    out[c] = normals[pick].normalized();
    degenerate[c] = false;
  }
  return out;
}

OffsetExemplars build_offset_exemplars(const std::vector<double>& offsets, double split,
                                       int per_group, std::uint64_t seed) {
  if (offsets.empty()) throw Error(ErrorKind::kDomain, "no offsets to cluster");
  if (per_group < 1) throw Error(ErrorKind::kDomain, "per_group must be at least 1");

  std::vector<double> near, far;
  for (double d : offsets) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorKind::kDomain, "offsets must be positive and finite");
    }
    (d <= split ? near : far).push_back(d);
  }

  OffsetExemplars result;
  result.near_group_size = near.size();
  result.far_group_size = far.size();
  const auto cluster_group = [&](const std::vector<double>& group, const char* name,
                                 std::uint64_t stream) {
    if (group.size() < static_cast<std::size_t>(per_group)) {
      result.warnings.push_back(std::string(name) + " offset group has " +
                                std::to_string(group.size()) + " members, fewer than " +
                                std::to_string(per_group));
    }
    const int k = static_cast<int>(std::min(group.size(), static_cast<std::size_t>(per_group)));
    if (k == 0) return;
    for (double c : cluster_1d(group, k, derive_seed(seed, stream))) result.values.push_back(c);
  };
  cluster_group(near, "near", 0);
  cluster_group(far, "far", 1);

  std::sort(result.values.begin(), result.values.end());
  result.values.erase(std::unique(result.values.begin(), result.values.end()),
                      result.values.end());
  return result;
}

PlaneTarget encode_plane(const Plane& plane, const ExemplarSet& exemplars) {
  PlaneTarget target;
  const auto& normals = exemplars.normals();
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double dot = normals[i].dot(plane.normal());
    if (dot > best_dot) {
      best_dot = dot;
      target.normal_class = static_cast<int>(i);
    }
  }
  target.normal_residual = plane.normal() - normals[target.normal_class];

  const auto& offsets = exemplars.offsets();
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    const double gap = std::abs(plane.offset() - offsets[j]);
    if (gap < best_gap) {
      best_gap = gap;
      target.offset_class = static_cast<int>(j);
    }
  }
  target.offset_residual = plane.offset() - offsets[target.offset_class];
  return target;
}

Plane decode_plane(const ExemplarSet& exemplars, int normal_class,
                   const Eigen::Vector3d& normal_residual, int offset_class,
                   double offset_residual) {
  if (normal_class < 0 || normal_class >= exemplars.normal_count() || offset_class < 0 ||
      offset_class >= exemplars.offset_count()) {
    throw Error(ErrorKind::kDomain, "exemplar class index out of range");
  }
  const Eigen::Vector3d raw = exemplars.normals()[normal_class] + normal_residual;
  const double norm = raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorKind::kDecode, "decoded normal is zero");
  }
  const double offset = exemplars.offsets()[offset_class] + offset_residual;
  if (!(offset > 0.0)) {
    throw Error(ErrorKind::kDecode, "decoded offset is not positive");
  }
  // Offset is a distance; only the direction is renormalized.
  return Plane::canonical(raw / norm, offset);
}

}  // namespace planekit
