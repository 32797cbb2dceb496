#pragma once

// Generative samplers and the parameter-recovery experiment.
//
// Synthetic ground truth (stands in for data-derived truth, which is not
// redistributable): Z0 has two equal communities with within-block logit
// +1.5 and between-block logit -1.5 by default; each deviation is
// D_i = Q_i L0 Q_i' with Q_i Haar-distributed on the Stiefel manifold and a
// fixed loading pattern L0 whose magnitudes scale with V (so the deviation
// entries keep an O(1) logit scale at any V) and whose tail entries are
// negative.
//
// All sampling is keyed by mt19937_64 streams derived per network with
// splitmix64, so results are reproducible and independent of scheduling.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mgraf/cise.hpp"
#include "mgraf/model.hpp"
#include "mgraf/netdata.hpp"
#include "mgraf/parallel.hpp"
#include "mgraf/rng.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

struct SimulationSpec {
  int nodes = 30;
  int networks = 100;
  int rank = 3;
  std::uint64_t seed = 1;
  double within_block_logit = 0.5;
  double between_block_logit = -0.5;
  double deviation_scale = 1.25;   // lambda magnitude in units of V
  double perturb_fraction = 0.10;  // fraction of lower-tri Z entries permuted per replicate
};

struct GroundTruth {
  Matrix Z0;
  std::vector<Matrix> D0;
  int rank = 0;
};

// Fixed loading pattern: magnitudes scale*V*decay^(k-1); the last floor(K/3)
// entries are negative so that both spectrum ends stay exercised. The decay
// is gentle so every signal axis stays well above the per-axis overfitting
// gain of a spare eigenvector.
inline Vector lambda_pattern(int nodes, int rank, double scale, double decay = 0.95) {
  require(rank >= 1, "lambda_pattern: rank must be >= 1");
  Vector lam(rank);
  const int positives = (2 * rank + 2) / 3;  // ceil(2K/3)
  for (int k = 0; k < rank; ++k) {
    const double mag = scale * static_cast<double>(nodes) * std::pow(decay, k);
    lam[k] = k < positives ? mag : -mag;
  }
  return lam;
}

// Haar-distributed orthonormal V x K basis (QR of a Gaussian matrix with the
// R-diagonal sign correction).
inline Matrix random_stiefel(int nodes, int rank, Rng& rng) {
  Matrix g(nodes, rank);
  for (int c = 0; c < rank; ++c) {
    for (int r = 0; r < nodes; ++r) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = Matrix(qr.householderQ()).leftCols(rank);
  const Matrix r_factor = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  for (int c = 0; c < rank; ++c) {
    if (r_factor(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

inline Matrix block_z(int nodes, double within, double between) {
  Matrix z(nodes, nodes);
  const int half = nodes / 2;
  for (int u = 0; u < nodes; ++u) {
    for (int v = 0; v < nodes; ++v) {
      z(u, v) = ((u < half) == (v < half)) ? within : between;
    }
  }
  z.diagonal().setZero();
  return z;
}

inline GroundTruth make_truth(const SimulationSpec& spec, std::uint64_t seed_offset = 0) {
  GroundTruth t;
  t.rank = spec.rank;
  t.Z0 = block_z(spec.nodes, spec.within_block_logit, spec.between_block_logit);
  const Vector lam = lambda_pattern(spec.nodes, spec.rank, spec.deviation_scale);
  t.D0.resize(static_cast<std::size_t>(spec.networks));
  for (int i = 0; i < spec.networks; ++i) {
    Rng rng(Rng::derive(spec.seed + seed_offset, 0xD0ULL + static_cast<std::uint64_t>(i)));
    const Matrix q = random_stiefel(spec.nodes, spec.rank, rng);
    t.D0[static_cast<std::size_t>(i)] = q * lam.asDiagonal() * q.transpose();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Samplers

inline NetworkStack sample_er(int nodes, double p, int n, std::uint64_t seed) {
  require(p >= 0.0 && p <= 1.0, "sample_er: p outside [0,1]");
  require(nodes >= 2 && n >= 1, "sample_er: need V >= 2 and n >= 1");
  std::vector<Matrix> nets(static_cast<std::size_t>(n));
  parallel_for(0, n, [&](int i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    Matrix a = Matrix::Zero(nodes, nodes);
    for (int v = 0; v < nodes - 1; ++v) {
      for (int u = v + 1; u < nodes; ++u) {
        const double x = rng.bernoulli(p) ? 1.0 : 0.0;
        a(u, v) = x;
        a(v, u) = x;
      }
    }
    nets[static_cast<std::size_t>(i)] = std::move(a);
  });
  return NetworkStack::create(std::move(nets));
}

inline NetworkStack sample_mgraf(const Matrix& z, const std::vector<Matrix>& deviations,
                                 std::uint64_t seed) {
  require(!deviations.empty(), "sample_mgraf: need at least one deviation matrix");
  const int V = static_cast<int>(z.rows());
  require(z.cols() == V, "sample_mgraf: Z must be square");
  const int n = static_cast<int>(deviations.size());
  std::vector<Matrix> nets(static_cast<std::size_t>(n));
  parallel_for(0, n, [&](int i) {
    const Matrix& d = deviations[static_cast<std::size_t>(i)];
    require(d.rows() == V && d.cols() == V, "sample_mgraf: deviation shape mismatch");
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    Matrix a = Matrix::Zero(V, V);
    for (int v = 0; v < V - 1; ++v) {
      for (int u = v + 1; u < V; ++u) {
        const double x = rng.bernoulli(sigmoid(z(u, v) + d(u, v))) ? 1.0 : 0.0;
        a(u, v) = x;
        a(v, u) = x;
      }
    }
    nets[static_cast<std::size_t>(i)] = std::move(a);
  });
  return NetworkStack::create(std::move(nets));
}

// Permutes ceil(fraction*L) randomly chosen lower-triangle entries of a
// symmetric matrix among themselves.
inline Matrix permute_lower_fraction(const Matrix& z, double fraction, Rng& rng) {
  require(fraction >= 0.0 && fraction <= 1.0, "permute_lower_fraction: fraction outside [0,1]");
  const int V = static_cast<int>(z.rows());
  Vector tri = vectorize_lower(z);
  const auto L = tri.size();
  const auto m = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(L)));
  if (m <= 1) return devectorize(tri, V);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(L));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first m entries are a uniform subset.
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(L - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<double> vals(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) vals[static_cast<std::size_t>(i)] = tri[idx[static_cast<std::size_t>(i)]];
  rng.shuffle(vals);
  for (Eigen::Index i = 0; i < m; ++i) tri[idx[static_cast<std::size_t>(i)]] = vals[static_cast<std::size_t>(i)];
  return devectorize(tri, V);
}

// ---------------------------------------------------------------------------
// Parameter-recovery experiment

struct RecoveryCell {
  int networks = 0;
  int repetition = 0;
  bool converged = false;
  Vector z_diff;  // elementwise L(Zhat) - L(Ztrue)
  Vector d_diff;  // pooled over the sampled networks
};

struct RecoveryReport {
  std::vector<RecoveryCell> cells;
};

struct RecoveryOptions {
  int sampled_networks = 20;  // networks whose D differences are recorded
  CiseOptions fit;
};

inline RecoveryReport recovery_experiment(const SimulationSpec& spec,
                                          const std::vector<int>& n_grid, int repetitions,
                                          const RecoveryOptions& opts = {}) {
  require(!n_grid.empty(), "recovery_experiment: empty n grid");
  require(repetitions >= 1, "recovery_experiment: repetitions must be >= 1");
  const Matrix z_base = block_z(spec.nodes, spec.within_block_logit, spec.between_block_logit);
  const Vector lam = lambda_pattern(spec.nodes, spec.rank, spec.deviation_scale);

  RecoveryReport report;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const int n = n_grid[gi];
    require(n >= 1, "recovery_experiment: n must be >= 1");
    for (int rep = 0; rep < repetitions; ++rep) {
      const std::uint64_t cell_seed =
          Rng::derive(spec.seed, 0xEC0ULL + 1000 * static_cast<std::uint64_t>(gi) +
                                     static_cast<std::uint64_t>(rep));
      Rng rng(cell_seed);
      const Matrix z_true = permute_lower_fraction(z_base, spec.perturb_fraction, rng);
      std::vector<Matrix> d_true(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        Rng qrng(Rng::derive(cell_seed, 0xD0ULL + static_cast<std::uint64_t>(i)));
        const Matrix q = random_stiefel(spec.nodes, spec.rank, qrng);
        d_true[static_cast<std::size_t>(i)] = q * lam.asDiagonal() * q.transpose();
      }
      const NetworkStack stack = sample_mgraf(z_true, d_true, Rng::derive(cell_seed, 0x5AULL));

      auto [model, fit] = cise_fit(stack, spec.rank, opts.fit);

      RecoveryCell cell;
      cell.networks = n;
      cell.repetition = rep;
      cell.converged = fit.converged;
      cell.z_diff = vectorize_lower(model.Z) - vectorize_lower(z_true);

      const int pick = std::min(opts.sampled_networks, n);
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      Rng pick_rng(Rng::derive(cell_seed, 0x71CCULL));
      pick_rng.shuffle(order);
      const auto L = tri_length(spec.nodes);
      cell.d_diff = Vector(static_cast<Eigen::Index>(pick) * L);
      for (int s = 0; s < pick; ++s) {
        const int i = order[static_cast<std::size_t>(s)];
        cell.d_diff.segment(static_cast<Eigen::Index>(s) * L, L) =
            vectorize_lower(model.deviation(i)) -
            vectorize_lower(d_true[static_cast<std::size_t>(i)]);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Scan-rescan generator

struct ScanRescanData {
  NetworkStack stack;  // two scans per subject; labels carry the subject tag
  GroundTruth truth;   // one deviation per subject
};

// `spread` scales the between-subject deviation loadings; at 0 every subject
// shares the same (zero) deviation and identification degrades to chance.
// Within-pair variability is Bernoulli sampling noise only.
inline ScanRescanData sample_scan_rescan(const SimulationSpec& spec, double spread,
                                         std::uint64_t seed) {
  require(spread >= 0.0, "sample_scan_rescan: spread must be >= 0");
  const int subjects = spec.networks;
  require(subjects >= 2, "sample_scan_rescan: need at least two subjects");
  const Matrix z = block_z(spec.nodes, spec.within_block_logit, spec.between_block_logit);
  const Vector lam = spread * lambda_pattern(spec.nodes, spec.rank, spec.deviation_scale);

  ScanRescanData out;
  out.truth.rank = spec.rank;
  out.truth.Z0 = z;
  std::vector<Matrix> nets;
  std::vector<std::string> ids, labels;
  for (int s = 0; s < subjects; ++s) {
    Rng qrng(Rng::derive(seed, 0xD0ULL + static_cast<std::uint64_t>(s)));
    const Matrix q = random_stiefel(spec.nodes, spec.rank, qrng);
    const Matrix d = q * lam.asDiagonal() * q.transpose();
    out.truth.D0.push_back(d);
    const std::vector<Matrix> both{d, d};
    NetworkStack pair = sample_mgraf(z, both, Rng::derive(seed, 0x5CA2ULL + static_cast<std::uint64_t>(s)));
    for (int r = 0; r < 2; ++r) {
      nets.push_back(pair.nets[static_cast<std::size_t>(r)]);
      ids.push_back("s" + std::to_string(s) + (r == 0 ? "_a" : "_b"));
      labels.push_back("s" + std::to_string(s));
    }
  }
  out.stack = NetworkStack::create(std::move(nets), std::move(ids), std::move(labels));
  return out;
}

}  // namespace mgraf
