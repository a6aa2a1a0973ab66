#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace planekit {

// (row, column) pairs sorted by row.
using Assignment = std::vector<std::pair<int, int>>;

// Minimum-cost one-to-one assignment of min(rows, cols) pairs. Among optimal
// assignments the one whose column sequence (by ascending row, unmatched
// rows last) is lexicographically smallest is returned.
Assignment hungarian(const Eigen::MatrixXd& cost);

// Sum of cost(r, c) over pairs in ascending row order.
double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& assignment);

}  // namespace planekit
