#include "planekit/kmeans.hpp"

#include <limits>

#include "planekit/error.hpp"
#include "planekit/random.hpp"

namespace planekit {

namespace {

// Nearest center, ties to the smallest index.
int nearest_center(const Eigen::MatrixXd& samples, Eigen::Index row,
                   const Eigen::MatrixXd& centers, double* best_d2) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d2 = (samples.row(row) - centers.row(c)).squaredNorm();
    if (d2 < best) {
      best = d2;
      arg = static_cast<int>(c);
    }
  }
  if (best_d2) *best_d2 = best;
  return arg;
}

}  // namespace

double kmeans_inertia(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& centers,
                      const std::vector<int>& assignment) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    total += (samples.row(i) - centers.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

KMeansResult kmeans(const Eigen::MatrixXd& samples, int k, std::uint64_t seed, int max_iters) {
  const Eigen::Index n = samples.rows();
  if (k < 1) throw Error(ErrorKind::kDomain, "k-means needs k >= 1");
  if (n < k) throw Error(ErrorKind::kDomain, "k-means needs at least k samples");
  if (max_iters < 1) throw Error(ErrorKind::kDomain, "k-means needs max_iters >= 1");

  KMeansResult result;
  result.centers.resize(k, samples.cols());

  // Farthest-point initialization.
  Rng rng(seed);
  result.centers.row(0) = samples.row(static_cast<Eigen::Index>(uniform_index(rng, n)));
  std::vector<double> nearest_d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    nearest_d2[i] = (samples.row(i) - result.centers.row(0)).squaredNorm();
  }
  for (int c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (nearest_d2[i] > nearest_d2[far]) far = i;
    }
    result.centers.row(c) = samples.row(far);
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest_d2[i] = std::min(nearest_d2[i], (samples.row(i) - result.centers.row(c)).squaredNorm());
    }
  }

  result.assignment.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_center(samples, i, result.centers, &d2[i]);
      if (c != result.assignment[i]) {
        result.assignment[i] = c;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      result.inertia.push_back(kmeans_inertia(samples, result.centers, result.assignment));
      break;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, samples.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.assignment[i]) += samples.row(i);
      ++counts[result.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) result.centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }
    result.inertia.push_back(kmeans_inertia(samples, result.centers, result.assignment));

    // Re-seed empty clusters with the sample farthest from its center.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = 0;
      double far_d2 = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double e =
            (samples.row(i) - result.centers.row(result.assignment[i])).squaredNorm();
        if (e > far_d2) {
          far_d2 = e;
          far = i;
        }
      }
      result.centers.row(c) = samples.row(far);
    }
  }
  return result;
}

}  // namespace planekit
