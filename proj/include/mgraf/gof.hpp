#pragma once

// Goodness-of-fit tooling: edge-prediction AUC and RSS, topological
// summaries with posterior-predictive intervals, and the elbow scan over the
// latent dimension.
//
// AUC is the Mann-Whitney statistic with midranks (ties averaged); RSS is
// the L2 norm of L(A_i) - L(Pi_i). Average shortest path length is taken
// over connected ordered pairs, with the disconnected fraction reported
// alongside; transitivity is tr(A^3) / sum_v deg_v (deg_v - 1), defined as 0
// when no connected triples exist.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mgraf/cise.hpp"
#include "mgraf/model.hpp"
#include "mgraf/netdata.hpp"
#include "mgraf/parallel.hpp"
#include "mgraf/rng.hpp"
#include "mgraf/simulate.hpp"
#include "mgraf/stats.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

// ---------------------------------------------------------------------------
// AUC / RSS

inline double mann_whitney_auc(const std::vector<double>& score,
                               const std::vector<std::uint8_t>& truth) {
  require(score.size() == truth.size() && !score.empty(), "mann_whitney_auc: size mismatch");
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (truth[k]) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  require(n_pos > 0 && n_neg > 0, "mann_whitney_auc: need both classes present");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct AucRss {
  double auc = std::numeric_limits<double>::quiet_NaN();
  bool auc_defined = false;
  double rss = 0.0;
};

inline AucRss auc_rss_one(const Matrix& a, const Matrix& pi_hat) {
  require(a.rows() == pi_hat.rows() && a.cols() == pi_hat.cols(), "auc_rss_one: shape mismatch");
  const Vector ya = vectorize_lower(a);
  const Vector yp = vectorize_lower(pi_hat);
  AucRss r;
  r.rss = (ya - yp).norm();
  std::vector<double> score(yp.data(), yp.data() + yp.size());
  std::vector<std::uint8_t> truth(static_cast<std::size_t>(ya.size()));
  std::size_t ones = 0;
  for (Eigen::Index l = 0; l < ya.size(); ++l) {
    truth[static_cast<std::size_t>(l)] = ya[l] != 0.0;
    ones += truth[static_cast<std::size_t>(l)];
  }
  if (ones == 0 || ones == truth.size()) return r;  // AUC undefined
  r.auc = mann_whitney_auc(score, truth);
  r.auc_defined = true;
  return r;
}

struct AucRssSummary {
  std::vector<AucRss> per_network;
  double auc_mean = std::numeric_limits<double>::quiet_NaN();
  double auc_sd = std::numeric_limits<double>::quiet_NaN();
  double rss_mean = 0.0;
  double rss_sd = 0.0;
  int auc_defined_count = 0;
};

inline AucRssSummary auc_rss(const NetworkStack& stack, const std::vector<Matrix>& pi_hats) {
  require(static_cast<std::size_t>(stack.size()) == pi_hats.size(), "auc_rss: stack/pi size mismatch");
  AucRssSummary s;
  std::vector<double> aucs, rsss;
  for (int i = 0; i < stack.size(); ++i) {
    s.per_network.push_back(auc_rss_one(stack[i], pi_hats[static_cast<std::size_t>(i)]));
    rsss.push_back(s.per_network.back().rss);
    if (s.per_network.back().auc_defined) {
      aucs.push_back(s.per_network.back().auc);
      ++s.auc_defined_count;
    }
  }
  s.rss_mean = mean_of(rsss);
  s.rss_sd = rsss.size() >= 2 ? sd_of(rsss) : 0.0;
  if (!aucs.empty()) {
    s.auc_mean = mean_of(aucs);
    s.auc_sd = aucs.size() >= 2 ? sd_of(aucs) : 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Topology

struct TopologySummary {
  double density = 0.0;
  double avg_path_length = std::numeric_limits<double>::quiet_NaN();
  bool apl_defined = false;
  double disconnected_fraction = 0.0;
  double transitivity = 0.0;
  double degree_mean = 0.0;
};

inline TopologySummary topology_summary(const Matrix& a) {
  const int V = static_cast<int>(a.rows());
  require(a.cols() == V && V >= 2, "topology_summary: bad adjacency");
  TopologySummary t;
  const double L = static_cast<double>(tri_length(V));
  double edges = 0.0;
  std::vector<double> deg(static_cast<std::size_t>(V), 0.0);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(V));
  for (int v = 0; v < V; ++v) {
    for (int u = 0; u < V; ++u) {
      if (u != v && a(u, v) != 0.0) {
        deg[static_cast<std::size_t>(v)] += 1.0;
        adj[static_cast<std::size_t>(v)].push_back(u);
      }
    }
    if (v > 0) {
      for (int u = 0; u < v; ++u) edges += a(u, v) != 0.0 ? 1.0 : 0.0;
    }
  }
  t.density = edges / L;
  t.degree_mean = 2.0 * edges / static_cast<double>(V);

  // Triangles over connected triples.
  double triples = 0.0;
  for (int v = 0; v < V; ++v) triples += deg[static_cast<std::size_t>(v)] * (deg[static_cast<std::size_t>(v)] - 1.0);
  if (triples > 0.0) {
    const double closed = (a * a * a).trace();
    t.transitivity = closed / triples;
  }

  // BFS shortest paths over connected ordered pairs.
  double dist_sum = 0.0;
  std::int64_t reachable = 0;
  std::vector<int> dist(static_cast<std::size_t>(V));
  std::deque<int> queue;
  for (int src = 0; src < V; ++src) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(src)] = 0;
    queue.clear();
    queue.push_back(src);
    while (!queue.empty()) {
      const int x = queue.front();
      queue.pop_front();
      for (int y : adj[static_cast<std::size_t>(x)]) {
        if (dist[static_cast<std::size_t>(y)] < 0) {
          dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
          queue.push_back(y);
        }
      }
    }
    for (int dst = 0; dst < V; ++dst) {
      if (dst == src) continue;
      if (dist[static_cast<std::size_t>(dst)] > 0) {
        dist_sum += dist[static_cast<std::size_t>(dst)];
        ++reachable;
      }
    }
  }
  const auto ordered_pairs = static_cast<std::int64_t>(V) * (V - 1);
  t.disconnected_fraction =
      static_cast<double>(ordered_pairs - reachable) / static_cast<double>(ordered_pairs);
  if (reachable > 0) {
    t.avg_path_length = dist_sum / static_cast<double>(reachable);
    t.apl_defined = true;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Predictive topology check

inline constexpr int kTopologyMeasures = 4;
inline const char* topology_measure_name(int m) {
  constexpr const char* names[kTopologyMeasures] = {"density", "avg_path_length", "transitivity",
                                                    "degree_mean"};
  return names[m];
}

struct PredictiveTopology {
  // n x 4 (density, avg_path_length, transitivity, degree_mean); NaN = undefined
  Matrix observed;
  Matrix pred_mean;
  Matrix lo;
  Matrix hi;
};

namespace detail {

inline Vector topology_as_vector(const TopologySummary& t) {
  Vector v(kTopologyMeasures);
  v << t.density,
      (t.apl_defined ? t.avg_path_length : std::numeric_limits<double>::quiet_NaN()),
      t.transitivity, t.degree_mean;
  return v;
}

}  // namespace detail

// For each subject, simulates `replicates` networks from Pi_i and returns the
// per-measure predictive mean and central 95% interval next to the observed
// value. Pi entries are clamped into [0,1] before sampling.
inline PredictiveTopology predictive_topology_check(const std::vector<Matrix>& pi_hats,
                                                    const NetworkStack& observed,
                                                    int replicates, std::uint64_t seed) {
  require(static_cast<int>(pi_hats.size()) == observed.size(),
          "predictive_topology_check: size mismatch");
  require(replicates >= 2, "predictive_topology_check: need >= 2 replicates");
  const int n = observed.size();
  const int V = observed.nodes();
  PredictiveTopology out;
  out.observed = Matrix(n, kTopologyMeasures);
  out.pred_mean = Matrix(n, kTopologyMeasures);
  out.lo = Matrix(n, kTopologyMeasures);
  out.hi = Matrix(n, kTopologyMeasures);

  parallel_for(0, n, [&](int i) {
    out.observed.row(i) = detail::topology_as_vector(topology_summary(observed[i])).transpose();
    const Matrix& pi = pi_hats[static_cast<std::size_t>(i)];
    std::vector<std::vector<double>> samples(kTopologyMeasures);
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    Matrix a = Matrix::Zero(V, V);
    for (int r = 0; r < replicates; ++r) {
      for (int v = 0; v < V - 1; ++v) {
        for (int u = v + 1; u < V; ++u) {
          const double p = std::min(1.0, std::max(0.0, pi(u, v)));
          const double x = rng.bernoulli(p) ? 1.0 : 0.0;
          a(u, v) = x;
          a(v, u) = x;
        }
      }
      const Vector m = detail::topology_as_vector(topology_summary(a));
      for (int k = 0; k < kTopologyMeasures; ++k) {
        if (std::isfinite(m[k])) samples[static_cast<std::size_t>(k)].push_back(m[k]);
      }
    }
    for (int k = 0; k < kTopologyMeasures; ++k) {
      auto& s = samples[static_cast<std::size_t>(k)];
      if (s.empty()) {
        out.pred_mean(i, k) = out.lo(i, k) = out.hi(i, k) =
            std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      out.pred_mean(i, k) = mean_of(s);
      out.lo(i, k) = quantile_of(s, 0.025);
      out.hi(i, k) = quantile_of(s, 0.975);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Elbow scan

struct ElbowScan {
  std::vector<int> k_grid;
  std::vector<double> mean_ll;
  std::vector<double> lo, hi;        // t-based 95% CI of the mean across repetitions
  Matrix per_rep;                    // repetitions x |grid|, converged joint log-likelihood
  std::vector<double> aic, bic;      // reference only, from the mean log-likelihood
  std::optional<int> suggested_k;    // discrete max-curvature of the mean curve
  int failed_fits = 0;
};

// Most negative second divided difference (interior grid points only).
inline std::optional<int> suggest_bend(const std::vector<int>& grid,
                                       const std::vector<double>& values) {
  require(grid.size() == values.size(), "suggest_bend: size mismatch");
  if (grid.size() < 3) return std::nullopt;
  std::optional<int> best_k;
  double best = 0.0;
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
    const double x0 = grid[j - 1], x1 = grid[j], x2 = grid[j + 1];
    const double s1 = (values[j] - values[j - 1]) / (x1 - x0);
    const double s2 = (values[j + 1] - values[j]) / (x2 - x1);
    const double curv = 2.0 * (s2 - s1) / (x2 - x0);
    if (!best_k || curv < best) {
      best = curv;
      best_k = grid[j];
    }
  }
  return best_k;
}

namespace detail {

inline double parameter_count(Variant variant, int n, int V, int K) {
  const double L = static_cast<double>(tri_length(V));
  const double stiefel = static_cast<double>(V) * K - 0.5 * K * (K + 1);
  switch (variant) {
    case Variant::FullLambda: return L + static_cast<double>(n) * K + n * stiefel;
    case Variant::SharedLambda: return L + K + n * stiefel;
    case Variant::SharedQ: return L + static_cast<double>(n) * K + stiefel;
  }
  return L;
}

inline void finish_elbow(ElbowScan& scan, Variant variant, int n, int V) {
  const int reps = static_cast<int>(scan.per_rep.rows());
  for (std::size_t j = 0; j < scan.k_grid.size(); ++j) {
    std::vector<double> col;
    for (int r = 0; r < reps; ++r) col.push_back(scan.per_rep(r, static_cast<Eigen::Index>(j)));
    const double m = mean_of(col);
    scan.mean_ll.push_back(m);
    if (reps >= 2) {
      const double half = t_quantile(0.975, reps - 1) * sd_of(col) / std::sqrt(double(reps));
      scan.lo.push_back(m - half);
      scan.hi.push_back(m + half);
    } else {
      scan.lo.push_back(m);
      scan.hi.push_back(m);
    }
    const double p = parameter_count(variant, n, V, scan.k_grid[j]);
    scan.aic.push_back(-2.0 * m + 2.0 * p);
    scan.bic.push_back(-2.0 * m + p * std::log(static_cast<double>(n) * static_cast<double>(tri_length(V))));
  }
  scan.suggested_k = suggest_bend(scan.k_grid, scan.mean_ll);
}

}  // namespace detail

// Elbow scan on a fixed stack (single repetition).
inline ElbowScan elbow_scan_stack(const NetworkStack& stack, const std::vector<int>& k_grid,
                                  Variant variant = Variant::FullLambda,
                                  const CiseOptions& opts = {}) {
  require(!k_grid.empty(), "elbow_scan: empty K grid");
  for (std::size_t j = 1; j < k_grid.size(); ++j) {
    require(k_grid[j] > k_grid[j - 1], "elbow_scan: K grid must be strictly increasing");
  }
  ElbowScan scan;
  scan.k_grid = k_grid;
  scan.per_rep = Matrix(1, static_cast<Eigen::Index>(k_grid.size()));
  for (std::size_t j = 0; j < k_grid.size(); ++j) {
    try {
      auto [model, fit] = fit_mgraf(stack, variant, k_grid[j], opts);
      scan.per_rep(0, static_cast<Eigen::Index>(j)) = fit.loglik_trace.back();
    } catch (const std::exception&) {
      scan.per_rep(0, static_cast<Eigen::Index>(j)) = std::numeric_limits<double>::quiet_NaN();
      ++scan.failed_fits;
    }
  }
  detail::finish_elbow(scan, variant, stack.size(), stack.nodes());
  return scan;
}

// Elbow scan with stacks resampled from the simulation spec per repetition
// (fresh deviations and a perturbed Z each time).
inline ElbowScan elbow_scan_resampled(const SimulationSpec& spec, const std::vector<int>& k_grid,
                                      int repetitions, Variant variant = Variant::FullLambda,
                                      const CiseOptions& opts = {}) {
  require(!k_grid.empty(), "elbow_scan: empty K grid");
  require(repetitions >= 1, "elbow_scan: repetitions must be >= 1");
  ElbowScan scan;
  scan.k_grid = k_grid;
  scan.per_rep = Matrix(repetitions, static_cast<Eigen::Index>(k_grid.size()));
  const Matrix z_base = block_z(spec.nodes, spec.within_block_logit, spec.between_block_logit);
  const Vector lam = lambda_pattern(spec.nodes, spec.rank, spec.deviation_scale);
  for (int rep = 0; rep < repetitions; ++rep) {
    const std::uint64_t rep_seed = Rng::derive(spec.seed, 0xE1B0ULL + static_cast<std::uint64_t>(rep));
    Rng rng(rep_seed);
    const Matrix z_true = permute_lower_fraction(z_base, spec.perturb_fraction, rng);
    std::vector<Matrix> d_true(static_cast<std::size_t>(spec.networks));
    for (int i = 0; i < spec.networks; ++i) {
      Rng qrng(Rng::derive(rep_seed, 0xD0ULL + static_cast<std::uint64_t>(i)));
      const Matrix q = random_stiefel(spec.nodes, spec.rank, qrng);
      d_true[static_cast<std::size_t>(i)] = q * lam.asDiagonal() * q.transpose();
    }
    const NetworkStack stack = sample_mgraf(z_true, d_true, Rng::derive(rep_seed, 0x5AULL));
    for (std::size_t j = 0; j < k_grid.size(); ++j) {
      try {
        auto [model, fit] = fit_mgraf(stack, variant, k_grid[j], opts);
        scan.per_rep(rep, static_cast<Eigen::Index>(j)) = fit.loglik_trace.back();
      } catch (const std::exception&) {
        scan.per_rep(rep, static_cast<Eigen::Index>(j)) = std::numeric_limits<double>::quiet_NaN();
        ++scan.failed_fits;
      }
    }
  }
  detail::finish_elbow(scan, variant, spec.networks, spec.nodes);
  return scan;
}

}  // namespace mgraf
