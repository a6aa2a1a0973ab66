#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "planekit/annotation.hpp"
#include "planekit/exemplars.hpp"
#include "planekit/geometry.hpp"
#include "planekit/matching.hpp"

namespace planekit {

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr double kDiceSmoothing = 1.0;

// Decoder output for one query.
struct QueryPrediction {
  double plane_prob = 0.0;
  std::vector<double> mask_logits;  // H × W, row-major
  std::vector<double> normal_class_logits;       // K_n
  std::vector<Eigen::Vector3d> normal_residuals;  // K_n rows
  std::vector<double> offset_class_logits;       // K_d
  std::vector<double> offset_residuals;          // K_d
};

struct PredictionSet {
  int width = 0;
  int height = 0;
  std::vector<QueryPrediction> queries;
  std::optional<std::vector<double>> pixel_depth;            // H × W
  std::optional<std::vector<Eigen::Vector3d>> pixel_normals;  // H × W

  // Throws Error(kConfiguration) on inconsistent shapes.
  void validate(int normal_count, int offset_count) const;
};

struct LossWeights {
  double classification = 2.0;
  double mask = 5.0;
  double normal_class = 1.0;
  double normal_residual = 5.0;
  double offset_class = 1.0;
  double offset_residual = 2.0;
  double pixel_depth = 0.5;
  double pixel_normal_l1 = 1.0;
  double pixel_normal_cos = 5.0;
};

struct LossBreakdown {
  double classification = 0.0;
  double mask = 0.0;
  double normal_class = 0.0;
  double normal_residual = 0.0;
  double offset_class = 0.0;
  double offset_residual = 0.0;
  double pixel_depth = 0.0;
  double pixel_normal_l1 = 0.0;
  double pixel_normal_cos = 0.0;
  double total = 0.0;

  // L1 plus cosine terms, unweighted.
  double pixel_normal() const { return pixel_normal_l1 + pixel_normal_cos; }
};

double sigmoid(double logit);
// Mean binary cross-entropy between sigmoid(logits) and a binary mask.
double mask_bce(const std::vector<double>& logits, const PixelMask& target);
// 1 − (2Σpg + 1)/(Σp + Σg + 1) on sigmoid probabilities.
double mask_dice(const std::vector<double>& logits, const PixelMask& target);
// −log softmax(logits)[target].
double softmax_cross_entropy(const std::vector<double>& logits, int target);

// Q × G matching cost: λ_c(1 − p) + λ_m(BCE + dice).
Eigen::MatrixXd matching_cost(const PredictionSet& predictions, const PlaneAnnotation& gt,
                              const LossWeights& weights = {});

// Full weighted loss for one prediction set against matched ground truth.
// `gt_targets[g]` encodes gt.planes[g]. Throws Error(kConfiguration) when the
// assignment or maps do not fit the shapes.
LossBreakdown compute_losses(const PredictionSet& predictions, const PlaneAnnotation& gt,
                             const std::vector<PlaneTarget>& gt_targets,
                             const DepthMap& gt_pixel_depth, const NormalMap& gt_pixel_normals,
                             const Assignment& assignment, const LossWeights& weights = {});

}  // namespace planekit
