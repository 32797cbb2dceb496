#pragma once

// Symmetric eigendecomposition utilities.
//
// eigen_sorted returns all eigenpairs in descending eigenvalue order with a
// deterministic sign convention (the largest-magnitude component of each
// vector is made positive; first such index on ties).
//
// select_signed_eigvecs(B, k_pos, k_neg) returns the eigenvectors of the
// k_pos largest eigenvalues followed by those of the k_neg smallest. For
// decreasing positive weights c this maximizes / minimizes sum_j c_j u_j'Bu_j
// over orthonormal sets, which is the workhorse of the Q update.
//
// Two backends: a dense solver, and a Lanczos iteration with full
// reorthogonalization for large V, where only the spectrum ends are needed
// at O(V^2 m) cost. Auto picks dense for V <= 256.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mgraf/rng.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

struct EigenSystem {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns aligned with values
};

enum class EigenBackend { Auto, Dense, Lanczos };

// Dense decomposition is used below this node count unless overridden.
inline constexpr int kDenseEigenLimit = 256;

namespace detail {

inline void fix_sign(Eigen::Ref<Matrix> vecs) {
  for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index r = 0; r < vecs.rows(); ++r) {
      const double a = std::fabs(vecs(r, c));
      if (a > amax) {
        amax = a;
        imax = r;
      }
    }
    if (vecs(imax, c) < 0.0) vecs.col(c) = -vecs.col(c);
  }
}

inline void check_symmetric(const Matrix& b, double tol) {
  require(b.rows() == b.cols(), "eigen: matrix must be square");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  ensure((b - b.transpose()).cwiseAbs().maxCoeff() <= tol * scale,
         "eigen: matrix is not symmetric within tolerance");
}

}  // namespace detail

inline EigenSystem eigen_sorted(const Matrix& b, double sym_tol = 1e-10) {
  detail::check_symmetric(b, sym_tol);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
  ensure(solver.info() == Eigen::Success, "eigen_sorted: eigensolver failed to converge");
  const auto V = b.rows();
  EigenSystem sys;
  sys.values = solver.eigenvalues().reverse();
  sys.vectors = solver.eigenvectors().rowwise().reverse();
  detail::fix_sign(sys.vectors);
  (void)V;
  return sys;
}

// ---------------------------------------------------------------------------
// Lanczos with full reorthogonalization

struct LanczosOptions {
  int max_steps = 0;        // 0: min(V, 4*(k_pos+k_neg) + 16)
  double tol = 1e-8;        // relative Ritz residual target
  std::uint64_t seed = 0x6d67726166ULL;
};

// Extreme eigenpairs of a symmetric matrix: the k_pos algebraically largest
// and k_neg smallest. Returned vectors are orthonormal Ritz vectors; if the
// step budget is exhausted before the residual target they are best-effort.
inline EigenSystem lanczos_extreme(const Matrix& b, int k_pos, int k_neg,
                                   const LanczosOptions& opts = {}) {
  const int V = static_cast<int>(b.rows());
  const int want = k_pos + k_neg;
  require(want >= 1 && want <= V, "lanczos_extreme: need 1 <= k_pos + k_neg <= V");
  const int cap = std::min(V, opts.max_steps > 0 ? opts.max_steps : 4 * want + 16);

  Matrix basis(V, cap);
  std::vector<double> alpha, beta;
  Rng rng(Rng::derive(opts.seed, static_cast<std::uint64_t>(V)));
  Vector v(V);
  for (int r = 0; r < V; ++r) v[r] = rng.normal();
  v.normalize();
  basis.col(0) = v;

  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff() * std::sqrt(double(V)));
  int m = 0;
  Eigen::SelfAdjointEigenSolver<Matrix> tsolver;

  auto converged = [&](int steps) {
    if (steps < std::min(cap, want)) return false;
    // Tridiagonal eigenproblem of the current Krylov section.
    Matrix t = Matrix::Zero(steps, steps);
    for (int i = 0; i < steps; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < steps) {
        t(i, i + 1) = beta[static_cast<std::size_t>(i)];
        t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
    }
    tsolver.compute(t);
    if (steps < want) return false;
    const double edge = beta.empty() ? 0.0 : std::fabs(beta.back());
    // Residual of Ritz pair j is |beta_m * s_{m,j}|.
    for (int j = 0; j < k_pos; ++j) {
      const double res = edge * std::fabs(tsolver.eigenvectors()(steps - 1, steps - 1 - j));
      if (res > opts.tol * scale) return false;
    }
    for (int j = 0; j < k_neg; ++j) {
      const double res = edge * std::fabs(tsolver.eigenvectors()(steps - 1, j));
      if (res > opts.tol * scale) return false;
    }
    return true;
  };

  bool done = false;
  while (m < cap && !done) {
    Vector w = b * basis.col(m);
    const double a = basis.col(m).dot(w);
    alpha.push_back(a);
    w -= a * basis.col(m);
    if (m > 0) w -= beta[static_cast<std::size_t>(m - 1)] * basis.col(m - 1);
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j <= m; ++j) w -= basis.col(j).dot(w) * basis.col(j);
    }
    const double nw = w.norm();
    ++m;
    if (m >= cap) break;
    if (nw <= 1e-13 * scale) {
      // Invariant subspace hit; restart with a fresh orthogonal direction.
      Vector f(V);
      for (int r = 0; r < V; ++r) f[r] = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < m; ++j) f -= basis.col(j).dot(f) * basis.col(j);
      }
      const double nf = f.norm();
      if (nf <= 1e-13) break;
      beta.push_back(0.0);
      basis.col(m) = f / nf;
    } else {
      beta.push_back(nw);
      basis.col(m) = w / nw;
    }
    done = (m % std::max(1, want) == 0 || m == cap) && converged(m);
  }

  // Final Ritz extraction from the m-step section.
  Matrix t = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) {
      t(i, i + 1) = beta[static_cast<std::size_t>(i)];
      t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
  }
  tsolver.compute(t);
  ensure(m >= want, "lanczos_extreme: Krylov space too small");

  EigenSystem sys;
  sys.values = Vector(want);
  sys.vectors = Matrix(V, want);
  // tsolver orders ascending; top block descending, bottom block kept so that
  // values stay in descending order overall.
  for (int j = 0; j < k_pos; ++j) {
    sys.values[j] = tsolver.eigenvalues()(m - 1 - j);
    sys.vectors.col(j) = basis.leftCols(m) * tsolver.eigenvectors().col(m - 1 - j);
  }
  for (int j = 0; j < k_neg; ++j) {
    const int dst = k_pos + j;
    sys.values[dst] = tsolver.eigenvalues()(k_neg - 1 - j);
    sys.vectors.col(dst) = basis.leftCols(m) * tsolver.eigenvectors().col(k_neg - 1 - j);
  }
  detail::fix_sign(sys.vectors);
  return sys;
}

// ---------------------------------------------------------------------------
// Signed selection (Proposition-2 optimizer)

inline Matrix select_signed_eigvecs(const Matrix& b, int k_pos, int k_neg,
                                    EigenBackend backend = EigenBackend::Auto,
                                    const LanczosOptions& opts = {}) {
  require(k_pos >= 0 && k_neg >= 0, "select_signed_eigvecs: counts must be nonnegative");
  const int V = static_cast<int>(b.rows());
  require(k_pos + k_neg <= V, "select_signed_eigvecs: k_pos + k_neg > V");
  if (k_pos + k_neg == 0) return Matrix(V, 0);
  const bool dense = backend == EigenBackend::Dense ||
                     (backend == EigenBackend::Auto && V <= kDenseEigenLimit);
  if (dense) {
    const EigenSystem sys = eigen_sorted(b);
    Matrix q(V, k_pos + k_neg);
    for (int j = 0; j < k_pos; ++j) q.col(j) = sys.vectors.col(j);
    for (int j = 0; j < k_neg; ++j) {
      q.col(k_pos + j) = sys.vectors.col(V - k_neg + j);
    }
    return q;
  }
  return lanczos_extreme(b, k_pos, k_neg, opts).vectors;
}

// Largest-magnitude eigenvectors, used by the CISE initialization.
inline Matrix top_magnitude_eigvecs(const Matrix& b, int k) {
  const int V = static_cast<int>(b.rows());
  require(k >= 1 && k <= V, "top_magnitude_eigvecs: need 1 <= k <= V");
  const EigenSystem sys = eigen_sorted(b);
  std::vector<int> order(static_cast<std::size_t>(V));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return std::fabs(sys.values[i]) > std::fabs(sys.values[j]);
  });
  Matrix q(V, k);
  for (int j = 0; j < k; ++j) q.col(j) = sys.vectors.col(order[static_cast<std::size_t>(j)]);
  return q;
}

// Orthonormal basis of the space orthogonal to the columns of Q.
inline Matrix orthonormal_complement(const Matrix& q) {
  const auto V = q.rows();
  const auto m = q.cols();
  require(m >= 1 && m < V, "orthonormal_complement: need 1 <= cols < rows");
  ensure((q.transpose() * q - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-8,
         "orthonormal_complement: columns are not orthonormal (rank-deficient input?)");
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix full = qr.householderQ();
  Matrix u = full.rightCols(V - m);
  // Householder noise is ~1e-15; one Gram-Schmidt sweep against Q tightens
  // U'Q to the 1e-10 contract.
  u -= q * (q.transpose() * u);
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    for (Eigen::Index j = 0; j < c; ++j) u.col(c) -= u.col(j).dot(u.col(c)) * u.col(j);
    u.col(c).normalize();
  }
  return u;
}

}  // namespace mgraf
