#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "planekit/error.hpp"
#include "planekit/metrics.hpp"
#include "support/oracles.hpp"

namespace planekit {
namespace {

SegLabeling labels(int width, int height, std::vector<std::int32_t> values) {
  SegLabeling out(width, height);
  out.data() = std::move(values);
  return out;
}

SegLabeling random_labels(std::mt19937_64& gen, int w, int h, int classes) {
  std::uniform_int_distribution<int> d(0, classes - 1);
  SegLabeling out(w, h);
  for (auto& v : out.data()) v = d(gen);
  return out;
}

TEST(RandIndex, Examples) {
  const auto a = labels(4, 1, {0, 0, 1, 1});
  const auto b = labels(4, 1, {0, 1, 1, 1});
  EXPECT_EQ(rand_index(a, b), 0.5);
  EXPECT_EQ(rand_index(a, a), 1.0);
}

TEST(RandIndex, MatchesPairwiseEnumeration) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 1 + static_cast<int>(gen() % 16), h = 1 + static_cast<int>(gen() % 16);
    const auto a = random_labels(gen, w, h, 1 + trial % 5);
    const auto b = random_labels(gen, w, h, 1 + trial % 7);
    EXPECT_EQ(rand_index(a, b), oracle::pairwise_rand_index(a.data(), b.data()));
  }
}

TEST(RandIndex, InvariantToRelabeling) {
  std::mt19937_64 gen(2);
  const auto a = random_labels(gen, 10, 10, 4);
  const auto b = random_labels(gen, 10, 10, 4);
  SegLabeling relabeled = b;
  for (auto& v : relabeled.data()) v = (v * 7 + 3) % 4 + 100;
  EXPECT_EQ(rand_index(a, b), rand_index(a, relabeled));
  EXPECT_EQ(variation_of_information(a, b), variation_of_information(a, relabeled));
  EXPECT_EQ(seg_covering(a, b), seg_covering(a, relabeled));
}

TEST(Voi, Examples) {
  const auto a = labels(4, 1, {0, 0, 1, 1});
  const auto c = labels(4, 1, {5, 5, 5, 5});
  EXPECT_NEAR(variation_of_information(a, c), std::log(2.0), 1e-12);
  EXPECT_EQ(variation_of_information(a, a), 0.0);
}

TEST(Voi, SymmetricAndMatchesEntropyDefinition) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_labels(gen, 12, 9, 2 + trial % 4);
    const auto b = random_labels(gen, 12, 9, 1 + trial % 6);
    const double ab = variation_of_information(a, b);
    EXPECT_NEAR(ab, variation_of_information(b, a), 1e-12);
    EXPECT_NEAR(ab, oracle::entropy_voi(a.data(), b.data()), 1e-12);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(SegCovering, Examples) {
  const auto a = labels(4, 1, {0, 0, 1, 1});
  const auto c = labels(4, 1, {0, 0, 0, 0});
  EXPECT_EQ(seg_covering(a, c), 0.5);
  EXPECT_EQ(seg_covering(a, a), 1.0);
}

TEST(SegCovering, EvenSplitsMatchDirectIouTable) {
  // Every gt segment splits evenly between two predicted segments.
  const auto gt = labels(8, 1, {0, 0, 0, 0, 1, 1, 1, 1});
  const auto pred = labels(8, 1, {10, 10, 11, 11, 12, 12, 13, 13});
  EXPECT_EQ(seg_covering(gt, pred), 0.5);
  EXPECT_EQ(seg_covering(gt, pred), oracle::direct_covering(gt.data(), pred.data()));
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_labels(gen, 7, 7, 3);
    const auto p = random_labels(gen, 7, 7, 4);
    const double sc = seg_covering(g, p);
    EXPECT_NEAR(sc, oracle::direct_covering(g.data(), p.data()), 1e-12);
    EXPECT_GE(sc, 0.0);
    EXPECT_LE(sc, 1.0);
  }
}

TEST(Metrics, SizeMismatchIsRejected) {
  EXPECT_THROW(rand_index(SegLabeling(2, 2), SegLabeling(4, 1)), Error);
}

CameraIntrinsics camera_64() { return {60.0, 60.0, 31.5, 23.5, 64, 48}; }

PlaneAnnotation whole_image(const Plane& plane) {
  PlaneAnnotation ann;
  ann.camera = camera_64();
  PlaneInstance p;
  p.plane = plane;
  for (std::uint32_t i = 0; i < ann.camera.pixel_count(); ++i) p.mask.indices.push_back(i);
  ann.planes.push_back(p);
  return ann;
}

PlaneAnnotation two_halves(const Plane& left, const Plane& right, int split) {
  PlaneAnnotation ann;
  ann.camera = camera_64();
  PlaneInstance l, r;
  l.plane = left;
  r.plane = right;
  for (int v = 0; v < 48; ++v) {
    for (int u = 0; u < 64; ++u) {
      (u < split ? l : r).mask.indices.push_back(static_cast<std::uint32_t>(v * 64 + u));
    }
  }
  ann.planes = {l, r};
  return ann;
}

TEST(PlaneRecall, IdenticalIsPerfect) {
  const PlaneAnnotation gt = two_halves(Plane::canonical({0, 0, 1}, 2.0),
                                        Plane::canonical({0.3, 0, 1}, 3.0), 30);
  const RecallReport r = plane_recall(gt, gt, camera_64(), RecallSpec::indoor());
  EXPECT_EQ(r.depth_recall(), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(r.normal_recall(), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(PlaneRecall, NoPredictionsIsZero) {
  const PlaneAnnotation gt = whole_image(Plane::canonical({0, 0, 1}, 2.0));
  PlaneAnnotation empty;
  empty.camera = camera_64();
  const RecallReport r = plane_recall(empty, gt, camera_64(), RecallSpec::indoor());
  EXPECT_EQ(r.depth_recall(), (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(r.normal_recall(), (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_TRUE(r.defined());
}

TEST(PlaneRecall, ConstantDepthOffset) {
  const PlaneAnnotation gt = whole_image(Plane::canonical({0, 0, 1}, 2.0));
  const PlaneAnnotation pred = whole_image(Plane::canonical({0, 0, 1}, 2.07));
  const RecallReport r = plane_recall(pred, gt, camera_64(), RecallSpec::indoor());
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_NEAR(r.pairs[0].depth_error, 0.07, 1e-12);
  EXPECT_EQ(r.pairs[0].normal_error, 0.0);
  EXPECT_EQ(r.depth_recall(), (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_EQ(r.normal_recall(), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(PlaneRecall, LowIouIsUnmatched) {
  const Plane p = Plane::canonical({0, 0, 1}, 2.0);
  const PlaneAnnotation gt = two_halves(p, p, 32);
  const PlaneAnnotation pred = two_halves(p, p, 8);  // left IoU = 8/32
  const RecallReport r = plane_recall(pred, gt, camera_64(), RecallSpec::indoor());
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].gt_index, 1);
  EXPECT_EQ(r.depth_recall()[0], 0.5);
}

TEST(PlaneRecall, MonotoneInThresholdsAndIouFloor) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    const PlaneAnnotation gt = two_halves(Plane::canonical({u(gen), u(gen), 1}, 2.0 + u(gen)),
                                          Plane::canonical({u(gen), u(gen), 1}, 3.0 + u(gen)), 32);
    const PlaneAnnotation pred =
        two_halves(Plane::canonical({u(gen), u(gen), 1}, 2.0 + u(gen)),
                   Plane::canonical({u(gen), u(gen), 1}, 3.0 + u(gen)), 20 + trial);
    RecallSpec spec = RecallSpec::indoor();
    spec.depth_thresholds = {0.01, 0.05, 0.1, 0.3, 1.0};
    const RecallReport strict = plane_recall(pred, gt, camera_64(), spec);
    const auto dr = strict.depth_recall();
    for (std::size_t t = 1; t < dr.size(); ++t) EXPECT_LE(dr[t - 1], dr[t]);
    spec.iou_threshold = 0.25;
    const RecallReport loose = plane_recall(pred, gt, camera_64(), spec);
    for (std::size_t t = 0; t < dr.size(); ++t) EXPECT_LE(dr[t], loose.depth_recall()[t]);
  }
}

TEST(PlaneRecall, NoSharedValidPixelIsInfinite) {
  // A predicted plane behind the camera meets no pixel ray.
  PlaneAnnotation gt = whole_image(Plane::canonical({0, 0, 1}, 2.0));
  PlaneAnnotation pred = whole_image(Plane::canonical({0, 0, -1}, 2.0));
  const RecallReport r = plane_recall(pred, gt, camera_64(), RecallSpec::indoor());
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].depth_error, std::numeric_limits<double>::infinity());
}

TEST(RecallSpec, Validation) {
  RecallSpec s = RecallSpec::outdoor();
  EXPECT_EQ(s.depth_thresholds, (std::vector<double>{1.0, 3.0, 10.0}));
  EXPECT_NO_THROW(s.validate());
  s.depth_thresholds = {3.0, 1.0};
  EXPECT_THROW(s.validate(), Error);
}

TEST(EvalReport, MergeSumsAndAverages) {
  const PlaneAnnotation gt = two_halves(Plane::canonical({0, 0, 1}, 2.0),
                                        Plane::canonical({0.3, 0, 1}, 3.0), 30);
  const PlaneAnnotation pred = whole_image(Plane::canonical({0, 0, 1}, 2.0));
  EvalReport total;
  const EvalReport a = evaluate_image(gt, gt, camera_64(), RecallSpec::indoor());
  const EvalReport b = evaluate_image(pred, gt, camera_64(), RecallSpec::indoor());
  total.merge(a);
  total.merge(b);
  EXPECT_EQ(total.image_count, 2u);
  EXPECT_EQ(total.recall.gt_count, 4u);
  EXPECT_NEAR(total.rand_index(), 0.5 * (a.rand_index() + b.rand_index()), 1e-15);
  EXPECT_EQ(a.rand_index(), 1.0);
  EXPECT_EQ(a.voi(), 0.0);
  EXPECT_EQ(a.seg_covering(), 1.0);
}

}  // namespace
}  // namespace planekit
