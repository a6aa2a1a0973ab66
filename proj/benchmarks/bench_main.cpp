#include <random>

#include <benchmark/benchmark.h>

#include "planekit/kmeans.hpp"
#include "planekit/matching.hpp"
#include "planekit/metrics.hpp"
#include "planekit/plane_fitting.hpp"
#include "planekit/synth.hpp"

namespace planekit {
namespace {

CameraIntrinsics camera(int width, int height) {
  const double f = 525.0 * width / 640.0;
  return {f, f, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
}

void BM_RansacSingle(benchmark::State& state) {
  const CameraIntrinsics k = camera(640, 480);
  SceneSpec spec;
  spec.plane_count = 1;
  spec.noise_sigma = 0.01;
  const SyntheticScene scene = synth_scene(spec, k);
  const PointCloud cloud = backproject(scene.depth, k);
  const FittingConfig cfg;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(ransac_single(cloud, cfg, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cloud.size()));
}
BENCHMARK(BM_RansacSingle)->Unit(benchmark::kMillisecond);

void BM_AnnotateImage(benchmark::State& state) {
  const CameraIntrinsics k = camera(640, 480);
  SceneSpec spec;
  spec.plane_count = static_cast<int>(state.range(0));
  spec.seed = 3;
  const SyntheticScene scene = synth_scene(spec, k);
  const CategoryRangeTable ranges = CategoryRangeTable::defaults();
  const FittingConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(annotate_image(scene.depth, scene.segmentation, k, ranges, cfg));
  }
}
BENCHMARK(BM_AnnotateImage)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Hungarian(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < cost.size(); ++i) cost(i) = u(gen);
  for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost));
}
BENCHMARK(BM_Hungarian)->Arg(8)->Arg(20)->Arg(100);

void BM_RandIndex(benchmark::State& state) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> label(0, 15);
  SegLabeling a(640, 480), b(640, 480);
  for (auto& v : a.data()) v = label(gen);
  for (auto& v : b.data()) v = label(gen);
  for (auto _ : state) benchmark::DoNotOptimize(rand_index(a, b));
}
BENCHMARK(BM_RandIndex)->Unit(benchmark::kMillisecond);

void BM_KMeansNormals(benchmark::State& state) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(state.range(0), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = Eigen::RowVector3d(g(gen), g(gen), g(gen)).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(x, 7, 1));
}
BENCHMARK(BM_KMeansNormals)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace planekit

BENCHMARK_MAIN();
