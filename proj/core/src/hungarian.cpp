#include "planekit/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "planekit/error.hpp"

namespace planekit {

namespace {

// Shortest-augmenting-path Hungarian method on a square matrix. Returns the
// column of each row and leaves optimal dual potentials in row_pot/col_pot.
std::vector<int> solve_square(const Eigen::MatrixXd& a, std::vector<double>& row_pot,
                              std::vector<double>& col_pot) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based internal indexing; column 0 is the virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> owner(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = owner[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const int j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_of(n, -1);
  for (int j = 1; j <= n; ++j) col_of[owner[j] - 1] = j - 1;
  row_pot.assign(u.begin() + 1, u.end());
  col_pot.assign(v.begin() + 1, v.end());
  return col_of;
}

class TightGraph {
 public:
  TightGraph(const Eigen::MatrixXd& a, const std::vector<double>& u,
             const std::vector<double>& v, std::vector<int> col_of)
      : n_(static_cast<int>(a.rows())), col_of_(std::move(col_of)), row_of_(n_, -1),
        tight_(static_cast<std::size_t>(n_) * n_, 0) {
    double scale = 1.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(a.data()[i]));
    const double tol = 1e-12 * scale * n_;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) tight_[idx(i, j)] = a(i, j) - u[i] - v[j] <= tol;
      tight_[idx(i, col_of_[i])] = 1;  // matched edges are tight by construction
    }
    for (int i = 0; i < n_; ++i) row_of_[col_of_[i]] = i;
  }

  // Rewrites the matching into the lexicographically smallest perfect
  // matching of the tight subgraph, fixing rows in ascending order.
  std::vector<int> lexicographic_min() {
    for (int r = 0; r < n_; ++r) {
      for (int c = 0; c < col_of_[r]; ++c) {
        if (!tight_[idx(r, c)]) continue;
        const int displaced = row_of_[c];
        if (displaced < r) continue;  // owned by a fixed row
        const int freed = col_of_[r];
        // Tentatively give c to r, then look for an alternating path from the
        // displaced row to the freed column through unfixed rows.
        col_of_[r] = c;
        row_of_[c] = r;
        visited_.assign(n_, 0);
        if (augment(displaced, freed, r)) break;
        col_of_[r] = freed;
        row_of_[freed] = r;
        row_of_[c] = displaced;
        col_of_[displaced] = c;
      }
    }
    return col_of_;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  bool augment(int row, int target, int fixed_upto) {
    visited_[row] = 1;
    for (int c = 0; c < n_; ++c) {
      if (!tight_[idx(row, c)]) continue;
      if (c == target) {
        col_of_[row] = c;
        row_of_[c] = row;
        return true;
      }
      const int next = row_of_[c];
      if (next <= fixed_upto || visited_[next]) continue;
      if (augment(next, target, fixed_upto)) {
        col_of_[row] = c;
        row_of_[c] = row;
        return true;
      }
    }
    return false;
  }

  int n_;
  std::vector<int> col_of_;
  std::vector<int> row_of_;
  std::vector<char> tight_;
  std::vector<char> visited_;
};

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
  const auto rows = static_cast<int>(cost.rows());
  const auto cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return {};
  if (!cost.allFinite()) {
    throw Error(ErrorKind::kDomain, "assignment costs must be finite");
  }
  // Dummy rows/columns cost nothing, so padding does not change the optimum.
  const int n = std::max(rows, cols);
  Eigen::MatrixXd square = Eigen::MatrixXd::Zero(n, n);
  square.topLeftCorner(rows, cols) = cost;

  std::vector<double> u, v;
  std::vector<int> col_of = solve_square(square, u, v);
  col_of = TightGraph(square, u, v, std::move(col_of)).lexicographic_min();

  Assignment out;
  for (int r = 0; r < rows; ++r) {
    if (col_of[r] < cols) out.emplace_back(r, col_of[r]);
  }
  return out;
}

double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& assignment) {
  double total = 0.0;
  for (const auto& [r, c] : assignment) total += cost(r, c);
  return total;
}

}  // namespace planekit
