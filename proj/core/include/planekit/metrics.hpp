#pragma once

#include <cstdint>
#include <vector>

#include "planekit/annotation.hpp"
#include "planekit/geometry.hpp"
#include "planekit/raster.hpp"

namespace planekit {

// Per-pixel segment labels; 0 is the non-planar segment and is scored like
// any other segment.
using SegLabeling = Raster<std::int32_t>;

// Pixel-pair agreement, computed from the contingency table.
double rand_index(const SegLabeling& a, const SegLabeling& b);
// H(a) + H(b) − 2I(a; b) in nats.
double variation_of_information(const SegLabeling& a, const SegLabeling& b);
// (1/N) Σ_R |R| max_R' IoU(R, R') over ground-truth segments R.
double seg_covering(const SegLabeling& gt, const SegLabeling& pred);

struct RecallSpec {
  double iou_threshold = 0.5;
  std::vector<double> depth_thresholds;   // meters, ascending
  std::vector<double> normal_thresholds;  // degrees, ascending

  static RecallSpec indoor();   // 0.05 / 0.1 / 0.6 m
  static RecallSpec outdoor();  // 1 / 3 / 10 m

  void validate() const;
};

struct MatchedPair {
  int gt_index = 0;
  int pred_index = 0;
  double iou = 0.0;
  double depth_error = 0.0;   // meters; +inf with no valid shared pixel
  double normal_error = 0.0;  // degrees
};

// Recall counts; merge() is associative so per-image results can be summed.
struct RecallReport {
  std::size_t gt_count = 0;
  std::vector<double> depth_thresholds;
  std::vector<double> normal_thresholds;
  std::vector<std::size_t> depth_hits;
  std::vector<std::size_t> normal_hits;
  std::vector<MatchedPair> pairs;

  // False when there are no ground-truth planes.
  bool defined() const noexcept { return gt_count > 0; }
  std::vector<double> depth_recall() const;
  std::vector<double> normal_recall() const;
  void merge(const RecallReport& other);
};

// Greedy one-to-one matching by descending mask IoU (above the floor), then
// thresholded depth and normal errors per matched pair.
RecallReport plane_recall(const PlaneAnnotation& pred, const PlaneAnnotation& gt,
                          const CameraIntrinsics& camera, const RecallSpec& spec);

struct EvalReport {
  std::size_t image_count = 0;
  double rand_index_sum = 0.0;
  double voi_sum = 0.0;
  double seg_covering_sum = 0.0;
  RecallReport recall;

  double rand_index() const;
  double voi() const;
  double seg_covering() const;
  void merge(const EvalReport& other);
};

EvalReport evaluate_image(const PlaneAnnotation& pred, const PlaneAnnotation& gt,
                          const CameraIntrinsics& camera, const RecallSpec& spec);

}  // namespace planekit
