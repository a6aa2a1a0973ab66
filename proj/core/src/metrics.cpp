#include "planekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>

#include "planekit/error.hpp"

namespace planekit {

namespace {

struct Cell {
  std::size_t a = 0;  // dense label index in `a`
  std::size_t b = 0;
  std::uint64_t count = 0;
};

// Label co-occurrence table between two labelings of the same image.
struct Contingency {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> a_sizes;
  std::vector<std::uint64_t> b_sizes;
  std::vector<Cell> cells;
};

std::vector<std::uint32_t> densify(const SegLabeling& labels, std::size_t* count) {
  std::vector<std::int32_t> unique(labels.data());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<std::uint32_t> dense(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    dense[i] = static_cast<std::uint32_t>(
        std::lower_bound(unique.begin(), unique.end(), labels[i]) - unique.begin());
  }
  *count = unique.size();
  return dense;
}

Contingency contingency(const SegLabeling& a, const SegLabeling& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::kConfiguration, "labelings differ in size");
  }
  Contingency table;
  table.n = a.size();
  std::size_t na = 0, nb = 0;
  const auto da = densify(a, &na);
  const auto db = densify(b, &nb);
  table.a_sizes.assign(na, 0);
  table.b_sizes.assign(nb, 0);

  std::vector<std::uint64_t> keys(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table.a_sizes[da[i]];
    ++table.b_sizes[db[i]];
    keys[i] = (static_cast<std::uint64_t>(da[i]) << 32) | db[i];
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    table.cells.push_back({static_cast<std::size_t>(keys[i] >> 32),
                           static_cast<std::size_t>(keys[i] & 0xffffffffu), j - i});
    i = j;
  }
  return table;
}

std::uint64_t pairs(std::uint64_t n) { return n * (n - (n > 0 ? 1 : 0)) / 2; }

}  // namespace

double rand_index(const SegLabeling& a, const SegLabeling& b) {
  const Contingency t = contingency(a, b);
  const std::uint64_t total = pairs(t.n);
  if (total == 0) return 1.0;
  std::uint64_t same_both = 0;
  for (const Cell& c : t.cells) same_both += pairs(c.count);
  std::uint64_t same_a = 0, same_b = 0;
  for (std::uint64_t s : t.a_sizes) same_a += pairs(s);
  for (std::uint64_t s : t.b_sizes) same_b += pairs(s);
  // Agreeing pairs = together in both + apart in both.
  const std::uint64_t apart_both = total - same_a - same_b + same_both;
  return static_cast<double>(same_both + apart_both) / static_cast<double>(total);
}

double variation_of_information(const SegLabeling& a, const SegLabeling& b) {
  const Contingency t = contingency(a, b);
  if (t.n == 0) return 0.0;
  const auto n = static_cast<double>(t.n);
  double voi = 0.0;
  for (const Cell& c : t.cells) {
    const auto nij = static_cast<double>(c.count);
    voi -= nij / n *
           (std::log(nij / static_cast<double>(t.a_sizes[c.a])) +
            std::log(nij / static_cast<double>(t.b_sizes[c.b])));
  }
  return std::max(voi, 0.0);
}

double seg_covering(const SegLabeling& gt, const SegLabeling& pred) {
  const Contingency t = contingency(gt, pred);
  if (t.n == 0) return 1.0;
  std::vector<double> best(t.a_sizes.size(), 0.0);
  for (const Cell& c : t.cells) {
    const auto inter = static_cast<double>(c.count);
    const double uni =
        static_cast<double>(t.a_sizes[c.a]) + static_cast<double>(t.b_sizes[c.b]) - inter;
    best[c.a] = std::max(best[c.a], inter / uni);
  }
  double covering = 0.0;
  for (std::size_t r = 0; r < best.size(); ++r) {
    covering += static_cast<double>(t.a_sizes[r]) * best[r];
  }
  return covering / static_cast<double>(t.n);
}

RecallSpec RecallSpec::indoor() { return {0.5, {0.05, 0.1, 0.6}, {5.0, 10.0, 30.0}}; }
RecallSpec RecallSpec::outdoor() { return {0.5, {1.0, 3.0, 10.0}, {5.0, 10.0, 30.0}}; }

void RecallSpec::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorKind::kConfiguration, "IoU threshold must be in (0, 1)");
  }
  for (const auto* list : {&depth_thresholds, &normal_thresholds}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (!((*list)[i] > 0.0) || (i > 0 && !((*list)[i] > (*list)[i - 1]))) {
        throw Error(ErrorKind::kConfiguration, "recall thresholds must be positive and ascending");
      }
    }
  }
}

std::vector<double> RecallReport::depth_recall() const {
  std::vector<double> out;
  for (std::size_t hits : depth_hits) {
    out.push_back(defined() ? static_cast<double>(hits) / static_cast<double>(gt_count) : 0.0);
  }
  return out;
}

std::vector<double> RecallReport::normal_recall() const {
  std::vector<double> out;
  for (std::size_t hits : normal_hits) {
    out.push_back(defined() ? static_cast<double>(hits) / static_cast<double>(gt_count) : 0.0);
  }
  return out;
}

void RecallReport::merge(const RecallReport& other) {
  if (depth_thresholds.empty() && normal_thresholds.empty() && gt_count == 0) {
    depth_thresholds = other.depth_thresholds;
    normal_thresholds = other.normal_thresholds;
    depth_hits.assign(depth_thresholds.size(), 0);
    normal_hits.assign(normal_thresholds.size(), 0);
  }
  if (other.depth_thresholds != depth_thresholds || other.normal_thresholds != normal_thresholds) {
    throw Error(ErrorKind::kConfiguration, "cannot merge reports with different thresholds");
  }
  gt_count += other.gt_count;
  for (std::size_t t = 0; t < depth_hits.size(); ++t) depth_hits[t] += other.depth_hits[t];
  for (std::size_t t = 0; t < normal_hits.size(); ++t) normal_hits[t] += other.normal_hits[t];
  pairs.insert(pairs.end(), other.pairs.begin(), other.pairs.end());
}

RecallReport plane_recall(const PlaneAnnotation& pred, const PlaneAnnotation& gt,
                          const CameraIntrinsics& camera, const RecallSpec& spec) {
  spec.validate();
  if (pred.width() != camera.width || pred.height() != camera.height ||
      gt.width() != camera.width || gt.height() != camera.height) {
    throw Error(ErrorKind::kConfiguration, "annotations and camera differ in size");
  }
  RecallReport report;
  report.gt_count = gt.planes.size();
  report.depth_thresholds = spec.depth_thresholds;
  report.normal_thresholds = spec.normal_thresholds;
  report.depth_hits.assign(spec.depth_thresholds.size(), 0);
  report.normal_hits.assign(spec.normal_thresholds.size(), 0);

  const Raster<std::int32_t> pred_labels = label_raster(pred);

  struct Candidate {
    int g;
    int p;
    double iou;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gt.planes.size(); ++g) {
    const PixelMask& mask = gt.planes[g].mask;
    std::map<std::int32_t, std::size_t> overlap;
    for (std::uint32_t i : mask.indices) {
      if (i >= pred_labels.size()) {
        throw Error(ErrorKind::kConfiguration, "ground-truth mask lies outside the image");
      }
      if (pred_labels[i] > 0) ++overlap[pred_labels[i]];
    }
    for (const auto& [label, inter] : overlap) {
      const std::size_t p = static_cast<std::size_t>(label - 1);
      const double iou = static_cast<double>(inter) /
                         static_cast<double>(mask.size() + pred.planes[p].mask.size() - inter);
      if (iou > spec.iou_threshold) {
        candidates.push_back({static_cast<int>(g), static_cast<int>(p), iou});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.iou > y.iou; });

  std::vector<char> gt_used(gt.planes.size(), 0), pred_used(pred.planes.size(), 0);
  const auto w = static_cast<std::uint32_t>(camera.width);
  for (const Candidate& c : candidates) {
    if (gt_used[c.g] || pred_used[c.p]) continue;
    gt_used[c.g] = 1;
    pred_used[c.p] = 1;

    const PlaneInstance& g = gt.planes[static_cast<std::size_t>(c.g)];
    const PlaneInstance& p = pred.planes[static_cast<std::size_t>(c.p)];
    double depth_sum = 0.0;
    std::size_t depth_count = 0;
    for (std::uint32_t i : g.mask.indices) {
      if (pred_labels[i] != c.p + 1) continue;
      const Eigen::Vector3d ray = camera.ray(i % w, i / w);
      const double zg = g.plane.depth_along(ray);
      const double zp = p.plane.depth_along(ray);
      if (!(zg > 0.0) || !(zp > 0.0)) continue;
      depth_sum += std::abs(zp - zg);
      ++depth_count;
    }
    MatchedPair pair;
    pair.gt_index = c.g;
    pair.pred_index = c.p;
    pair.iou = c.iou;
    pair.depth_error = depth_count > 0 ? depth_sum / static_cast<double>(depth_count)
                                       : std::numeric_limits<double>::infinity();
    pair.normal_error = normal_angle(g.plane, p.plane) * 180.0 / std::numbers::pi;
    for (std::size_t t = 0; t < spec.depth_thresholds.size(); ++t) {
      if (pair.depth_error <= spec.depth_thresholds[t]) ++report.depth_hits[t];
    }
    for (std::size_t t = 0; t < spec.normal_thresholds.size(); ++t) {
      if (pair.normal_error <= spec.normal_thresholds[t]) ++report.normal_hits[t];
    }
    report.pairs.push_back(pair);
  }
  std::sort(report.pairs.begin(), report.pairs.end(),
            [](const MatchedPair& x, const MatchedPair& y) { return x.gt_index < y.gt_index; });
  return report;
}

double EvalReport::rand_index() const {
  return image_count ? rand_index_sum / static_cast<double>(image_count) : 0.0;
}
double EvalReport::voi() const {
  return image_count ? voi_sum / static_cast<double>(image_count) : 0.0;
}
double EvalReport::seg_covering() const {
  return image_count ? seg_covering_sum / static_cast<double>(image_count) : 0.0;
}

void EvalReport::merge(const EvalReport& other) {
  image_count += other.image_count;
  rand_index_sum += other.rand_index_sum;
  voi_sum += other.voi_sum;
  seg_covering_sum += other.seg_covering_sum;
  recall.merge(other.recall);
}

EvalReport evaluate_image(const PlaneAnnotation& pred, const PlaneAnnotation& gt,
                          const CameraIntrinsics& camera, const RecallSpec& spec) {
  EvalReport report;
  const SegLabeling pred_labels = label_raster(pred);
  const SegLabeling gt_labels = label_raster(gt);
  report.image_count = 1;
  report.rand_index_sum = rand_index(gt_labels, pred_labels);
  report.voi_sum = variation_of_information(gt_labels, pred_labels);
  report.seg_covering_sum = seg_covering(gt_labels, pred_labels);
  report.recall = plane_recall(pred, gt, camera, spec);
  return report;
}

}  // namespace planekit
