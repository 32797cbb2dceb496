#pragma once

// Separate-factorization baseline: Pi_i = Abar + best rank-K approximation of
// A_i - Abar (largest-|eigenvalue| eigenpairs of the symmetric demeaned
// matrix). Raw values can leave [0,1]; a clamped copy is provided for any
// consumer that needs valid probabilities. Distances and RSS use the raw
// values.

#include <algorithm>
#include <cmath>
#include <vector>

#include "mgraf/netdata.hpp"
#include "mgraf/parallel.hpp"
#include "mgraf/spectral.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

struct SeparateFactorization {
  Matrix mean;                    // Abar
  std::vector<Matrix> deviation;  // rank-K approximations of A_i - Abar
  int rank = 0;

  int size() const { return static_cast<int>(deviation.size()); }
  Matrix pi_hat(int i) const { return mean + deviation[static_cast<std::size_t>(i)]; }
  Matrix pi_hat_clamped(int i, double eps = 1e-6) const {
    Matrix p = pi_hat(i);
    return p.unaryExpr([eps](double x) { return std::min(1.0 - eps, std::max(eps, x)); });
  }
};

inline SeparateFactorization fit_separate(const NetworkStack& stack, int rank) {
  const int V = stack.nodes();
  require(rank >= 0 && rank <= V, "fit_separate: need 0 <= K <= V");
  SeparateFactorization f;
  f.rank = rank;
  f.mean = mean_adjacency(stack);
  f.deviation.resize(static_cast<std::size_t>(stack.size()));
  parallel_for(0, stack.size(), [&](int i) {
    if (rank == 0) {
      f.deviation[static_cast<std::size_t>(i)] = Matrix::Zero(V, V);
      return;
    }
    const Matrix demeaned = stack[i] - f.mean;
    const EigenSystem sys = eigen_sorted(demeaned);
    std::vector<int> order(static_cast<std::size_t>(V));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::fabs(sys.values[a]) > std::fabs(sys.values[b]);
    });
    Matrix approx = Matrix::Zero(V, V);
    for (int j = 0; j < rank; ++j) {
      const int idx = order[static_cast<std::size_t>(j)];
      approx += sys.values[idx] * sys.vectors.col(idx) * sys.vectors.col(idx).transpose();
    }
    f.deviation[static_cast<std::size_t>(i)] = approx;
  });
  return f;
}

// Pairwise Frobenius distances between the raw Pi_i estimates. The shared
// mean cancels, so this equals the distance between the rank-K deviations.
inline Matrix baseline_distance(const SeparateFactorization& f) {
  const int n = f.size();
  Matrix d = Matrix::Zero(n, n);
  parallel_for(0, n, [&](int i) {
    for (int j = i + 1; j < n; ++j) {
      d(i, j) = (f.deviation[static_cast<std::size_t>(i)] - f.deviation[static_cast<std::size_t>(j)]).norm();
    }
  });
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) d(i, j) = d(j, i);
  }
  return d;
}

}  // namespace mgraf
