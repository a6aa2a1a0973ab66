#include "planekit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "planekit/error.hpp"

namespace planekit {

namespace {

double clamp_prob(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double neg_log(double p) { return -std::log(clamp_prob(p)); }

void check_mask_fits(const PixelMask& mask, std::size_t pixel_count) {
  if (!mask.empty() && mask.indices.back() >= pixel_count) {
    throw Error(ErrorKind::kConfiguration, "ground-truth mask lies outside the image");
  }
}

// Per-query quantities shared by every ground-truth column of the cost
// matrix: BCE against an all-zero target, and Σp.
struct MaskSummary {
  std::vector<double> prob;
  double bce_negative_sum = 0.0;
  double prob_sum = 0.0;
};

MaskSummary summarize(const std::vector<double>& logits) {
  MaskSummary s;
  s.prob.reserve(logits.size());
  for (double x : logits) {
    const double p = sigmoid(x);
    s.prob.push_back(p);
    s.bce_negative_sum += neg_log(1.0 - p);
    s.prob_sum += p;
  }
  return s;
}

// BCE + dice for one query against one mask.
double mask_loss(const MaskSummary& s, const PixelMask& target) {
  double bce_sum = s.bce_negative_sum;
  double intersection = 0.0;
  for (std::uint32_t i : target.indices) {
    const double p = s.prob[i];
    bce_sum += neg_log(p) - neg_log(1.0 - p);
    intersection += p;
  }
  const double bce = bce_sum / static_cast<double>(s.prob.size());
  const double dice = 1.0 - (2.0 * intersection + kDiceSmoothing) /
                                (s.prob_sum + static_cast<double>(target.size()) + kDiceSmoothing);
  return bce + dice;
}

}  // namespace

void PredictionSet::validate(int normal_count, int offset_count) const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kConfiguration, "prediction image size must be positive");
  }
  const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  for (const QueryPrediction& q : queries) {
    if (!(q.plane_prob >= 0.0 && q.plane_prob <= 1.0)) {
      throw Error(ErrorKind::kConfiguration, "plane probability must lie in [0, 1]");
    }
    if (q.mask_logits.size() != pixels) {
      throw Error(ErrorKind::kConfiguration, "mask logits do not match the image size");
    }
    if (static_cast<int>(q.normal_class_logits.size()) != normal_count ||
        static_cast<int>(q.normal_residuals.size()) != normal_count ||
        static_cast<int>(q.offset_class_logits.size()) != offset_count ||
        static_cast<int>(q.offset_residuals.size()) != offset_count) {
      throw Error(ErrorKind::kConfiguration, "class logits or residual tables have the wrong size");
    }
  }
  if (pixel_depth && pixel_depth->size() != pixels) {
    throw Error(ErrorKind::kConfiguration, "pixel depth does not match the image size");
  }
  if (pixel_normals && pixel_normals->size() != pixels) {
    throw Error(ErrorKind::kConfiguration, "pixel normals do not match the image size");
  }
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double mask_bce(const std::vector<double>& logits, const PixelMask& target) {
  check_mask_fits(target, logits.size());
  double sum = 0.0;
  auto next = target.indices.begin();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    if (next != target.indices.end() && *next == i) {
      sum += neg_log(p);
      ++next;
    } else {
      sum += neg_log(1.0 - p);
    }
  }
  return sum / static_cast<double>(logits.size());
}

double mask_dice(const std::vector<double>& logits, const PixelMask& target) {
  check_mask_fits(target, logits.size());
  double prob_sum = 0.0;
  for (double x : logits) prob_sum += sigmoid(x);
  double intersection = 0.0;
  for (std::uint32_t i : target.indices) intersection += sigmoid(logits[i]);
  return 1.0 - (2.0 * intersection + kDiceSmoothing) /
                   (prob_sum + static_cast<double>(target.size()) + kDiceSmoothing);
}

double softmax_cross_entropy(const std::vector<double>& logits, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw Error(ErrorKind::kConfiguration, "class target out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - peak);
  return std::log(sum) + peak - logits[target];
}

Eigen::MatrixXd matching_cost(const PredictionSet& predictions, const PlaneAnnotation& gt,
                              const LossWeights& weights) {
  if (predictions.width != gt.width() || predictions.height != gt.height()) {
    throw Error(ErrorKind::kConfiguration, "predictions and ground truth differ in size");
  }
  const std::size_t pixels =
      static_cast<std::size_t>(predictions.width) * static_cast<std::size_t>(predictions.height);
  for (const PlaneInstance& g : gt.planes) check_mask_fits(g.mask, pixels);

  const auto q_count = static_cast<Eigen::Index>(predictions.queries.size());
  const auto g_count = static_cast<Eigen::Index>(gt.planes.size());
  Eigen::MatrixXd cost(q_count, g_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    const QueryPrediction& query = predictions.queries[static_cast<std::size_t>(q)];
    if (query.mask_logits.size() != pixels) {
      throw Error(ErrorKind::kConfiguration, "mask logits do not match the image size");
    }
    const MaskSummary summary = summarize(query.mask_logits);
    const double class_cost = weights.classification * (1.0 - query.plane_prob);
    for (Eigen::Index g = 0; g < g_count; ++g) {
      cost(q, g) = class_cost +
                   weights.mask * mask_loss(summary, gt.planes[static_cast<std::size_t>(g)].mask);
    }
  }
  return cost;
}

LossBreakdown compute_losses(const PredictionSet& predictions, const PlaneAnnotation& gt,
                             const std::vector<PlaneTarget>& gt_targets,
                             const DepthMap& gt_pixel_depth, const NormalMap& gt_pixel_normals,
                             const Assignment& assignment, const LossWeights& weights) {
  if (predictions.width != gt.width() || predictions.height != gt.height()) {
    throw Error(ErrorKind::kConfiguration, "predictions and ground truth differ in size");
  }
  if (gt_targets.size() != gt.planes.size()) {
    throw Error(ErrorKind::kConfiguration, "one target per ground-truth plane is required");
  }
  const int normal_count = predictions.queries.empty()
                               ? 0
                               : static_cast<int>(predictions.queries[0].normal_class_logits.size());
  const int offset_count = predictions.queries.empty()
                               ? 0
                               : static_cast<int>(predictions.queries[0].offset_class_logits.size());
  predictions.validate(normal_count, offset_count);
  const std::size_t pixels =
      static_cast<std::size_t>(predictions.width) * static_cast<std::size_t>(predictions.height);

  std::set<int> used_queries, used_gts;
  for (const auto& [q, g] : assignment) {
    if (q < 0 || static_cast<std::size_t>(q) >= predictions.queries.size() || g < 0 ||
        static_cast<std::size_t>(g) >= gt.planes.size()) {
      throw Error(ErrorKind::kConfiguration, "assignment index out of range");
    }
    if (!used_queries.insert(q).second || !used_gts.insert(g).second) {
      throw Error(ErrorKind::kConfiguration, "assignment is not one-to-one");
    }
    const PlaneTarget& t = gt_targets[static_cast<std::size_t>(g)];
    if (t.normal_class < 0 || t.normal_class >= normal_count || t.offset_class < 0 ||
        t.offset_class >= offset_count) {
      throw Error(ErrorKind::kConfiguration, "target class outside the prediction tables");
    }
  }

  LossBreakdown out;

  // Plane/no-plane classification over every query.
  if (!predictions.queries.empty()) {
    double sum = 0.0;
    for (std::size_t q = 0; q < predictions.queries.size(); ++q) {
      const double p = predictions.queries[q].plane_prob;
      sum += used_queries.count(static_cast<int>(q)) ? neg_log(p) : neg_log(1.0 - p);
    }
    out.classification = sum / static_cast<double>(predictions.queries.size());
  }

  if (!assignment.empty()) {
    const auto m = static_cast<double>(assignment.size());
    for (const auto& [q, g] : assignment) {
      const QueryPrediction& query = predictions.queries[static_cast<std::size_t>(q)];
      const PlaneInstance& plane = gt.planes[static_cast<std::size_t>(g)];
      const PlaneTarget& target = gt_targets[static_cast<std::size_t>(g)];
      check_mask_fits(plane.mask, pixels);
      out.mask += mask_loss(summarize(query.mask_logits), plane.mask);
      out.normal_class += softmax_cross_entropy(query.normal_class_logits, target.normal_class);
      out.offset_class += softmax_cross_entropy(query.offset_class_logits, target.offset_class);
      // Only the residual row of the ground-truth class is supervised.
      out.normal_residual +=
          (query.normal_residuals[target.normal_class] - target.normal_residual).cwiseAbs().sum() /
          3.0;
      out.offset_residual +=
          std::abs(query.offset_residuals[target.offset_class] - target.offset_residual);
    }
    out.mask /= m;
    out.normal_class /= m;
    out.offset_class /= m;
    out.normal_residual /= m;
    out.offset_residual /= m;
  }

  if (predictions.pixel_depth && !gt_pixel_depth.values.empty()) {
    if (gt_pixel_depth.width() != predictions.width ||
        gt_pixel_depth.height() != predictions.height) {
      throw Error(ErrorKind::kConfiguration, "ground-truth depth differs in size");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pixels; ++i) {
      if (!gt_pixel_depth.is_valid(i)) continue;
      sum += std::abs((*predictions.pixel_depth)[i] - gt_pixel_depth.values[i]);
      ++count;
    }
    out.pixel_depth = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }

  if (predictions.pixel_normals && !gt_pixel_normals.values.empty()) {
    if (gt_pixel_normals.width() != predictions.width ||
        gt_pixel_normals.height() != predictions.height) {
      throw Error(ErrorKind::kConfiguration, "ground-truth normals differ in size");
    }
    std::vector<std::uint8_t> planar(pixels, 0);
    for (const PlaneInstance& plane : gt.planes) {
      check_mask_fits(plane.mask, pixels);
      for (std::uint32_t i : plane.mask.indices) planar[i] = 1;
    }
    double l1 = 0.0;
    double cos = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pixels; ++i) {
      if (!planar[i] || !gt_pixel_normals.is_valid(i)) continue;
      const Eigen::Vector3d& pred = (*predictions.pixel_normals)[i];
      const Eigen::Vector3d& truth = gt_pixel_normals.values[i];
      l1 += (pred - truth).cwiseAbs().sum() / 3.0;
      // 1 − cos θ written as ½‖p̂ − t̂‖², exact zero for identical directions.
      const double pn = pred.norm();
      const double tn = truth.norm();
      cos += (pn > 0.0 && tn > 0.0) ? 0.5 * (pred / pn - truth / tn).squaredNorm() : 1.0;
      ++count;
    }
    if (count > 0) {
      out.pixel_normal_l1 = l1 / static_cast<double>(count);
      out.pixel_normal_cos = cos / static_cast<double>(count);
    }
  }

  out.total = weights.classification * out.classification + weights.mask * out.mask +
              weights.normal_class * out.normal_class +
              weights.normal_residual * out.normal_residual +
              weights.offset_class * out.offset_class +
              weights.offset_residual * out.offset_residual +
              weights.pixel_depth * out.pixel_depth +
              weights.pixel_normal_l1 * out.pixel_normal_l1 +
              weights.pixel_normal_cos * out.pixel_normal_cos;
  return out;
}

}  // namespace planekit
