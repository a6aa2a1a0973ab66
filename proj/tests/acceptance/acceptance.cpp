// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "cli.hpp"
#include "planekit/exemplars.hpp"
#include "planekit/kmeans.hpp"
#include "planekit/losses.hpp"
#include "planekit/matching.hpp"
#include "planekit/metrics.hpp"
#include "planekit/plane_fitting.hpp"
#include "planekit/random.hpp"
#include "planekit/synth.hpp"
#include "support/oracles.hpp"
#include "support/tree_compare.hpp"

namespace planekit {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first failure message; later checks still run.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_failure_ = what;
    }
  }
  Outcome done(const std::string& summary) const {
    return {pass_, pass_ ? summary : first_failure_ + " (" + summary + ")"};
  }

 private:
  bool pass_ = true;
  std::string first_failure_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

CameraIntrinsics vga_camera() { return {525.0, 525.0, 319.5, 239.5, 640, 480}; }

constexpr int kSceneCount = 50;

struct SceneRun {
  RecallReport recall;
  double worst_angle = 0.0;
  double worst_offset = 0.0;
  double seconds = 0.0;
};

SceneRun run_scenes(double noise, const RecallSpec& spec) {
  const CameraIntrinsics camera = vga_camera();
  const CategoryRangeTable ranges = CategoryRangeTable::defaults();
  SceneRun run;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < kSceneCount; ++i) {
    SceneSpec s;
    s.plane_count = 5;
    s.noise_sigma = noise;
    s.seed = derive_seed(2024, static_cast<std::uint64_t>(i));
    const SyntheticScene scene = synth_scene(s, camera);
    FittingConfig cfg;
    cfg.seed = derive_seed(7, static_cast<std::uint64_t>(i));
    const PlaneAnnotation pred =
        annotate_image(scene.depth, scene.segmentation, camera, ranges, cfg, 1);
    const RecallReport r = plane_recall(pred, scene.ground_truth, camera, spec);
    for (const MatchedPair& p : r.pairs) {
      const Plane& a = pred.planes[static_cast<std::size_t>(p.pred_index)].plane;
      const Plane& b = scene.ground_truth.planes[static_cast<std::size_t>(p.gt_index)].plane;
      const double angle = std::atan2(a.normal().cross(b.normal()).norm(), a.normal().dot(b.normal()));
      run.worst_angle = std::max(run.worst_angle, angle);
      run.worst_offset = std::max(run.worst_offset, std::abs(a.offset() - b.offset()));
    }
    run.recall.merge(r);
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

Outcome synthetic_end_to_end() {
  const SceneRun run = run_scenes(0.0, RecallSpec::indoor());
  Check c;
  const double dr = run.recall.depth_recall()[0];
  const double nr = run.recall.normal_recall()[0];
  c.require(run.recall.gt_count == 5u * kSceneCount, "unexpected gt plane count");
  c.require(dr >= 0.95, "depth recall @0.05 m below 0.95");
  c.require(nr >= 0.95, "normal recall @5 deg below 0.95");
  c.require(run.worst_angle < 1e-4, "normal error not below 1e-4 rad");
  c.require(run.worst_offset < 1e-3, "offset error not below 1e-3 m");
  c.require(run.seconds < 300.0, "runtime not below 5 min");
  return c.done("depth recall " + fmt(dr) + ", normal recall " + fmt(nr) + ", max angle " +
                fmt(run.worst_angle) + " rad, max offset " + fmt(run.worst_offset) + " m, " +
                fmt(run.seconds) + " s");
}

Outcome noise_robustness() {
  RecallSpec spec;
  spec.depth_thresholds = {0.1};
  spec.normal_thresholds = {10.0};
  const SceneRun run = run_scenes(0.01, spec);
  Check c;
  const double dr = run.recall.depth_recall()[0];
  const double nr = run.recall.normal_recall()[0];
  c.require(dr >= 0.80, "depth recall @0.1 m below 0.80");
  c.require(nr >= 0.80, "normal recall @10 deg below 0.80");
  return c.done("depth recall " + fmt(dr) + ", normal recall " + fmt(nr));
}

Outcome adaptive_threshold_table() {
  const FittingConfig cfg;
  Check c;
  c.require(adaptive_threshold(2.0, cfg) == 0.05, "E(2) != 0.05");
  c.require(adaptive_threshold(10.0, cfg) == 0.05, "E(10) != 0.05");
  c.require(adaptive_threshold(40.0, cfg) == 0.20, "E(40) != 0.20");
  return c.done("E(2)=" + fmt(adaptive_threshold(2.0, cfg)) + ", E(10)=" +
                fmt(adaptive_threshold(10.0, cfg)) + ", E(40)=" +
                fmt(adaptive_threshold(40.0, cfg)));
}

Outcome exemplar_round_trip() {
  Rng rng(99);
  std::vector<Eigen::Vector3d> normals;
  std::vector<double> offsets;
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d n(uniform_unit(rng) - 0.5, uniform_unit(rng) - 0.5, -uniform_unit(rng));
    normals.push_back(n.normalized());
    offsets.push_back(0.5 + 60.0 * uniform_unit(rng));
  }
  const ExemplarSet set(build_normal_exemplars(normals, kDefaultNormalExemplars, 1),
                        build_offset_exemplars(offsets).values);
  Check c;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d n(2 * uniform_unit(rng) - 1, 2 * uniform_unit(rng) - 1,
                            2 * uniform_unit(rng) - 1);
    if (n.norm() < 1e-3) continue;
    const Plane p = Plane::canonical(n, 0.1 + 80.0 * uniform_unit(rng));
    const Plane q = decode_plane(set, encode_plane(p, set));
    worst = std::max({worst, (q.normal() - p.normal()).cwiseAbs().maxCoeff(),
                      std::abs(q.offset() - p.offset())});
  }
  c.require(worst <= 1e-12, "round trip error above 1e-12");

  std::vector<double> bimodal;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> near(1.0, 15.0), far(25.0, 70.0);
  for (int i = 0; i < 300; ++i) bimodal.push_back(near(gen));
  for (int i = 0; i < 300; ++i) bimodal.push_back(far(gen));
  const OffsetExemplars ex = build_offset_exemplars(bimodal);
  const auto near_count = std::count_if(ex.values.begin(), ex.values.end(),
                                        [](double v) { return v <= kDefaultOffsetSplit; });
  c.require(ex.values.size() == 20u, "expected 20 offset exemplars");
  c.require(std::is_sorted(ex.values.begin(), ex.values.end()), "offset exemplars not sorted");
  c.require(near_count == 10, "expected 10 exemplars per group");
  return c.done("max round trip error " + fmt(worst) + ", " + std::to_string(ex.values.size()) +
                " offset exemplars (" + std::to_string(near_count) + " near)");
}

Outcome hungarian_oracle() {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> cost(0.0, 10.0);
  Check c;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::MatrixXd m(dim(gen), dim(gen));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      // Every third matrix uses small integers to exercise ties.
      m(i) = trial % 3 == 0 ? std::floor(cost(gen) / 2.0) : cost(gen);
    }
    const double got = assignment_cost(m, hungarian(m));
    c.require(got == oracle::exhaustive_assignment_min(m),
              "mismatch on trial " + std::to_string(trial));
  }
  return c.done("1000 matrices up to 7x7");
}

Outcome metric_oracles() {
  std::mt19937_64 gen(23);
  std::uniform_int_distribution<int> side(1, 32);
  Check c;
  for (int trial = 0; trial < 200; ++trial) {
    SegLabeling a(side(gen), side(gen));
    SegLabeling b(a.width(), a.height());
    std::uniform_int_distribution<int> la(0, trial % 9), lb(0, trial % 5 + 1);
    for (auto& v : a.data()) v = la(gen);
    for (auto& v : b.data()) v = lb(gen);
    c.require(rand_index(a, b) == oracle::pairwise_rand_index(a.data(), b.data()),
              "RI mismatch on trial " + std::to_string(trial));
  }
  SegLabeling x(4, 1), y(4, 1), k(4, 1);
  x.data() = {0, 0, 1, 1};
  y.data() = {0, 1, 1, 1};
  k.data() = {3, 3, 3, 3};
  c.require(rand_index(x, y) == 0.5, "RI example != 0.5");
  c.require(std::abs(variation_of_information(x, k) - std::log(2.0)) <= 1e-12,
            "VOI example != ln 2");
  c.require(seg_covering(x, k) == 0.5, "SC example != 0.5");
  c.require(rand_index(x, x) == 1.0 && variation_of_information(x, x) == 0.0 &&
                seg_covering(x, x) == 1.0,
            "identical labelings not perfect");
  return c.done("200 random labelings, fixed examples");
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Outcome loss_sanity() {
  // One query against one plane covering pixels 0 and 3 of a 2x2 image.
  PlaneAnnotation gt;
  gt.camera = {1.0, 1.0, 0.5, 0.5, 2, 2};
  PlaneInstance plane;
  plane.plane = Plane::canonical({0, 0, 1}, 1.0);
  plane.mask.indices = {0, 3};
  gt.planes.push_back(plane);
  PlaneTarget t;
  t.normal_class = 1;
  t.normal_residual = {0.02, -0.01, 0.05};
  t.offset_class = 0;
  t.offset_residual = -0.3;
  DepthMap depth(2, 2);
  depth.set(std::size_t{0}, 2.0);
  depth.set(std::size_t{3}, 4.0);
  NormalMap normals(2, 2);
  normals.set(0, {0, 0, 1});
  normals.set(3, {0, 0, 1});

  PredictionSet pred;
  pred.width = 2;
  pred.height = 2;
  QueryPrediction q;
  q.plane_prob = 0.7;
  q.mask_logits = {1.5, -0.5, 0.5, 2.5};
  q.normal_class_logits = {0.3, 1.2};
  q.normal_residuals = {{4.0, 4.0, 4.0}, {0.02, -0.01, 0.05}};
  q.offset_class_logits = {0.8, -0.1};
  q.offset_residuals = {-0.3, 6.0};
  pred.queries.push_back(q);
  pred.pixel_depth = std::vector<double>{2.0, 9.0, 9.0, 4.0};
  pred.pixel_normals = std::vector<Eigen::Vector3d>{{0, 0, 2}, {1, 0, 0}, {1, 0, 0}, {0, 0, 1}};

  const Assignment match = {{0, 0}};
  const LossBreakdown b = compute_losses(pred, gt, {t}, depth, normals, match);
  Check c;
  c.require(b.normal_residual == 0.0 && b.offset_residual == 0.0 && b.pixel_depth == 0.0 &&
                b.pixel_normal_cos == 0.0,
            "perfect regression terms not zero");

  const double bce = (-std::log(sig(1.5)) - std::log(1 - sig(-0.5)) - std::log(1 - sig(0.5)) -
                      std::log(sig(2.5))) / 4.0;
  const double psum = sig(1.5) + sig(-0.5) + sig(0.5) + sig(2.5);
  const double dice = 1.0 - (2.0 * (sig(1.5) + sig(2.5)) + 1.0) / (psum + 2.0 + 1.0);
  const double lc = -std::log(0.7);
  const double lnc = std::log(std::exp(0.3) + std::exp(1.2)) - 1.2;
  const double ldc = std::log(std::exp(0.8) + std::exp(-0.1)) - 0.8;
  // Pixel 0 predicts (0, 0, 2): same direction, so only the L1 term sees it.
  const double l1 = (1.0 / 3.0) / 2.0;
  const double expected = 2.0 * lc + 5.0 * (bce + dice) + 1.0 * lnc + 1.0 * ldc + 1.0 * l1;
  c.require(std::abs(b.total - expected) <= 1e-9, "total differs from hand-computed sum");

  PredictionSet moved = pred;
  moved.queries[0].normal_residuals[0] = {-9.0, 1.0, 3.0};
  moved.queries[0].offset_residuals[1] = -40.0;
  const LossBreakdown m = compute_losses(moved, gt, {t}, depth, normals, match);
  c.require(m.normal_residual == b.normal_residual && m.offset_residual == b.offset_residual &&
                m.total == b.total,
            "non-target residual rows changed the loss");
  return c.done("total " + fmt(b.total) + " vs hand " + fmt(expected));
}

Outcome kmeans_properties() {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> g(0.0, 1.0);
  Check c;
  for (int run = 0; run < 100; ++run) {
    Eigen::MatrixXd x(120, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      x.row(i) << g(gen) + (i % 3) * 2.0, g(gen), g(gen) * 0.5;
    }
    const KMeansResult r = kmeans(x, 2 + run % 6, static_cast<std::uint64_t>(run));
    for (std::size_t i = 1; i < r.inertia.size(); ++i) {
      c.require(r.inertia[i] <= r.inertia[i - 1], "inertia rose in run " + std::to_string(run));
    }
  }

  Eigen::MatrixXd pts(5, 2);
  pts << 1, 2, -4, 0.5, 3, 3, 10, -1, 0, 0;
  const KMeansResult all = kmeans(pts, 5, 4);
  std::vector<std::vector<double>> got, want;
  for (int i = 0; i < 5; ++i) {
    got.push_back({all.centers(i, 0), all.centers(i, 1)});
    want.push_back({pts(i, 0), pts(i, 1)});
  }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  c.require(got == want, "K = N centers differ from the points");

  std::normal_distribution<double> blob(0.0, 0.3);
  Eigen::MatrixXd two(80, 2);
  Eigen::Vector2d ma = Eigen::Vector2d::Zero(), mb = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < 80; ++i) {
    two.row(i) << blob(gen) + (i < 40 ? -20.0 : 20.0), blob(gen) + 5.0;
    (i < 40 ? ma : mb) += two.row(i).transpose() / 40.0;
  }
  const KMeansResult r = kmeans(two, 2, 8);
  Eigen::Vector2d c0 = r.centers.row(0).transpose(), c1 = r.centers.row(1).transpose();
  if (c0.x() > c1.x()) std::swap(c0, c1);
  const double err = std::max((c0 - ma).cwiseAbs().maxCoeff(), (c1 - mb).cwiseAbs().maxCoeff());
  c.require(err <= 1e-6, "two-blob centers off by more than 1e-6");
  return c.done("100 runs, two-blob error " + fmt(err));
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "planekit_acceptance_jobs";
  fs::remove_all(root);
  const auto call = [](std::vector<std::string> args) {
    args.insert(args.begin(), "planekit");
    std::ostringstream out, err;
    return cli::run(args, out, err);
  };
  Check c;
  c.require(call({"synth", "--out", (root / "data").string(), "--count", "4", "--planes", "5",
                  "--width", "320", "--height", "240", "--noise", "0.01", "--seed", "8"}) == 0,
            "synth failed");
  for (const char* jobs : {"1", "8"}) {
    c.require(call({"annotate", "--input", (root / "data" / "images").string(), "--out",
                    (root / (std::string("jobs") + jobs)).string(), "--camera",
                    (root / "data" / "camera.json").string(), "--seed", "21", "--jobs",
                    jobs}) == 0,
              "annotate failed");
  }
  std::size_t files = 0;
  if (fs::exists(root / "jobs1") && fs::exists(root / "jobs8")) {
    const auto one = testing::snapshot_tree(root / "jobs1");
    files = one.size();
    c.require(!one.empty(), "no annotation files written");
    c.require(one == testing::snapshot_tree(root / "jobs8"), "outputs differ");
  }
  fs::remove_all(root);
  return c.done(std::to_string(files) + " files compared");
}

}  // namespace
}  // namespace planekit

int main() {
  using planekit::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"synthetic end-to-end", planekit::synthetic_end_to_end},
      {"noise robustness", planekit::noise_robustness},
      {"adaptive threshold table", planekit::adaptive_threshold_table},
      {"exemplar round trip", planekit::exemplar_round_trip},
      {"hungarian oracle", planekit::hungarian_oracle},
      {"metric oracles", planekit::metric_oracles},
      {"loss sanity", planekit::loss_sanity},
      {"k-means properties", planekit::kmeans_properties},
      {"cli determinism", planekit::cli_determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
