#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace planekit {

struct KMeansResult {
  Eigen::MatrixXd centers;        // K × D
  std::vector<int> assignment;    // per sample
  std::vector<double> inertia;    // within-cluster SSE after each Lloyd iteration
  int iterations = 0;
  bool converged = false;
};

// Lloyd's algorithm on the rows of `samples` (N × D).
//
// Initialization is farthest-point: a seeded random first center, then
// repeatedly the sample farthest from its nearest chosen center. Iterates
// until the assignment stops changing or max_iters. An empty cluster is
// re-seeded with the sample farthest from its assigned center. Ties resolve
// to the smallest index. Throws Error(kDomain) if N < K or K < 1.
KMeansResult kmeans(const Eigen::MatrixXd& samples, int k, std::uint64_t seed,
                    int max_iters = 100);

// Sum of squared distances of every sample to its assigned center.
double kmeans_inertia(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& centers,
                      const std::vector<int>& assignment);

}  // namespace planekit
