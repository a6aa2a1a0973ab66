#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "planekit/geometry.hpp"

namespace planekit {

inline constexpr int kDefaultNormalExemplars = 7;
inline constexpr int kDefaultOffsetExemplarsPerGroup = 10;
inline constexpr double kDefaultOffsetSplit = 20.0;  // meters

struct ExemplarProvenance {
  // Source offsets on each side of the split.
  std::size_t near_group_size = 0;
  std::size_t far_group_size = 0;
};

// Normal and offset anchors for classification-then-regression.
class ExemplarSet {
 public:
  ExemplarSet() = default;

  // Validates: unit normals, K_n ≥ 1, K_d ≥ 2, offsets positive and sorted.
  // Throws Error(kDomain).
  ExemplarSet(std::vector<Eigen::Vector3d> normals, std::vector<double> offsets,
              double split_threshold = kDefaultOffsetSplit, std::uint64_t seed = 0);

  const std::vector<Eigen::Vector3d>& normals() const noexcept { return normals_; }
  const std::vector<double>& offsets() const noexcept { return offsets_; }
  double split_threshold() const noexcept { return split_threshold_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int normal_count() const noexcept { return static_cast<int>(normals_.size()); }
  int offset_count() const noexcept { return static_cast<int>(offsets_.size()); }

  ExemplarProvenance provenance;

 private:
  std::vector<Eigen::Vector3d> normals_;
  std::vector<double> offsets_;
  double split_threshold_ = kDefaultOffsetSplit;
  std::uint64_t seed_ = 0;
};

// K-Means in 3-space followed by renormalization of each center.
std::vector<Eigen::Vector3d> build_normal_exemplars(const std::vector<Eigen::Vector3d>& normals,
                                                    int count, std::uint64_t seed);

struct OffsetExemplars {
  std::vector<double> values;  // strictly ascending
  std::size_t near_group_size = 0;
  std::size_t far_group_size = 0;
  std::vector<std::string> warnings;
};

// Splits offsets at `split` (near: ≤ split, far: > split), clusters each
// group in 1-D into up to `per_group` centers, merges and sorts.
OffsetExemplars build_offset_exemplars(const std::vector<double>& offsets,
                                       double split = kDefaultOffsetSplit,
                                       int per_group = kDefaultOffsetExemplarsPerGroup,
                                       std::uint64_t seed = 0);

struct PlaneTarget {
  int normal_class = 0;
  Eigen::Vector3d normal_residual = Eigen::Vector3d::Zero();
  int offset_class = 0;
  double offset_residual = 0.0;
};

PlaneTarget encode_plane(const Plane& plane, const ExemplarSet& exemplars);

// n = n̂ᵢ + r_n (renormalized), d = d̂ⱼ + r_d. Throws Error(kDomain) for an
// out-of-range class and Error(kDecode) for a non-positive offset or a zero
// normal.
Plane decode_plane(const ExemplarSet& exemplars, int normal_class,
                   const Eigen::Vector3d& normal_residual, int offset_class,
                   double offset_residual);
inline Plane decode_plane(const ExemplarSet& exemplars, const PlaneTarget& target) {
  return decode_plane(exemplars, target.normal_class, target.normal_residual,
                      target.offset_class, target.offset_residual);
}

}  // namespace planekit
