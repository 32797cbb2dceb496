#pragma once

// Deviation-space metrics and group tests.
//
// d(i,j) = ||D_i - D_j||_F collapses to traces of K x K matrices because the
// bases are orthonormal:
//   d^2 = tr(L_i^2) + tr(L_j^2) - 2 tr(L_i Q_i'Q_j L_j Q_j'Q_i),
// which for a shared basis further reduces to ||lambda_i - lambda_j||_2.
// Nothing V x V is materialized here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mgraf/model.hpp"
#include "mgraf/netdata.hpp"
#include "mgraf/parallel.hpp"
#include "mgraf/rng.hpp"
#include "mgraf/stats.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

inline Matrix pairwise_distance(const MgrafModel& model) {
  const int n = model.num_networks;
  Matrix d = Matrix::Zero(n, n);
  parallel_for(0, n, [&](int i) {
    for (int j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      if (model.variant == Variant::SharedQ) {
        d2 = (model.lambda_of(i) - model.lambda_of(j)).squaredNorm();
      } else {
        const Vector& li = model.lambda_of(i);
        const Vector& lj = model.lambda_of(j);
        const Matrix c = model.q_of(i).transpose() * model.q_of(j);  // K x K
        double cross = 0.0;
        for (Eigen::Index a = 0; a < c.rows(); ++a) {
          for (Eigen::Index b = 0; b < c.cols(); ++b) {
            cross += li[a] * lj[b] * c(a, b) * c(a, b);
          }
        }
        d2 = li.squaredNorm() + lj.squaredNorm() - 2.0 * cross;
      }
      d(i, j) = std::sqrt(std::max(0.0, d2));
    }
  });
  // mirror
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) d(i, j) = d(j, i);
  }
  return d;
}

// Class of minimum mean distance from the test point to the training members.
// Ties break toward the lower class id.
inline int classify_proximity(const Matrix& dist, const std::vector<int>& labels,
                              const std::vector<int>& train_idx, int test_idx) {
  require(dist.rows() == dist.cols(), "classify_proximity: distance matrix must be square");
  require(!train_idx.empty(), "classify_proximity: empty training set");
  std::map<int, std::pair<double, int>> sums;  // class -> (sum, count)
  for (int t : train_idx) {
    require(t >= 0 && t < dist.rows() && t != test_idx, "classify_proximity: bad training index");
    auto& s = sums[labels[static_cast<std::size_t>(t)]];
    s.first += dist(test_idx, t);
    s.second += 1;
  }
  require(sums.size() >= 1, "classify_proximity: no classes present");
  for (const auto& [cls, s] : sums) {
    require(s.second > 0, "classify_proximity: empty class " + std::to_string(cls));
  }
  int best_cls = sums.begin()->first;
  double best = sums.begin()->second.first / sums.begin()->second.second;
  for (const auto& [cls, s] : sums) {
    const double m = s.first / s.second;
    if (m < best) {  // strict: keeps the lower class id on ties (map is ordered)
      best = m;
      best_cls = cls;
    }
  }
  return best_cls;
}

// Fraction of scans whose nearest neighbor shares their subject id. Nearest
// neighbor ties resolve to the lower index.
inline double loocv_identification(const Matrix& dist, const std::vector<std::string>& ids) {
  const int n = static_cast<int>(dist.rows());
  require(static_cast<int>(ids.size()) == n, "loocv_identification: ids length mismatch");
  require(n >= 2, "loocv_identification: need at least two scans");
  std::map<std::string, int> counts;
  for (const auto& id : ids) counts[id] += 1;
  for (const auto& [id, c] : counts) {
    require(c >= 2, "loocv_identification: id '" + id + "' has a single scan");
  }
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    int jstar = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (jstar < 0 || dist(i, j) < dist(i, jstar)) jstar = j;
    }
    if (ids[static_cast<std::size_t>(jstar)] == ids[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

struct KfoldResult {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> per_repeat;
};

// Repeated stratified k-fold classification by the proximity rule.
inline KfoldResult repeated_kfold_classification(const Matrix& dist,
                                                 const std::vector<int>& labels, int folds,
                                                 int repeats, std::uint64_t seed) {
  const int n = static_cast<int>(dist.rows());
  require(static_cast<int>(labels.size()) == n, "repeated_kfold: labels length mismatch");
  require(folds >= 2, "repeated_kfold: need folds >= 2");
  require(repeats >= 1, "repeated_kfold: need repeats >= 1");
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < n; ++i) by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [cls, members] : by_class) {
    require(static_cast<int>(members.size()) >= folds,
            "repeated_kfold: class " + std::to_string(cls) + " smaller than fold count");
  }

  KfoldResult res;
  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(rep)));
    std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
    for (auto& [cls, members] : by_class) {
      std::vector<int> shuffled = members;
      rng.shuffle(shuffled);
      for (std::size_t p = 0; p < shuffled.size(); ++p) {
        fold_of[static_cast<std::size_t>(shuffled[p])] = static_cast<int>(p % static_cast<std::size_t>(folds));
      }
    }
    int correct = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> train;
      for (int i = 0; i < n; ++i) {
        if (fold_of[static_cast<std::size_t>(i)] != f) train.push_back(i);
      }
      for (int i = 0; i < n; ++i) {
        if (fold_of[static_cast<std::size_t>(i)] != f) continue;
        if (classify_proximity(dist, labels, train, i) == labels[static_cast<std::size_t>(i)]) {
          ++correct;
        }
      }
    }
    res.per_repeat.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  res.mean = mean_of(res.per_repeat);
  res.sd = res.per_repeat.size() >= 2 ? sd_of(res.per_repeat) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Per-edge two-sample tests with FDR control

struct EdgeTestReport {
  int nodes = 0;
  double fdr_level = 0.0;
  std::vector<double> t;       // per pair, in the fixed lower-triangle order
  std::vector<double> p;
  std::vector<double> df;
  std::vector<std::uint8_t> reject;
};

// Welch t-test of D_i[uv] between the two groups at every node pair, with
// Benjamini-Hochberg step-up at level q. Edges with zero variance in both
// groups get p = 1 by convention.
inline EdgeTestReport edge_group_ttest(const std::vector<Matrix>& deviations,
                                       const std::vector<int>& group01, double q) {
  require(!deviations.empty(), "edge_group_ttest: empty deviation list");
  require(deviations.size() == group01.size(), "edge_group_ttest: group labels length mismatch");
  const int V = static_cast<int>(deviations[0].rows());
  int n0 = 0, n1 = 0;
  for (int g : group01) {
    require(g == 0 || g == 1, "edge_group_ttest: group labels must be 0/1");
    (g == 0 ? n0 : n1) += 1;
  }
  require(n0 >= 2 && n1 >= 2, "edge_group_ttest: both groups need >= 2 members");

  const std::int64_t L = tri_length(V);
  EdgeTestReport rep;
  rep.nodes = V;
  rep.fdr_level = q;
  rep.t.resize(static_cast<std::size_t>(L));
  rep.p.resize(static_cast<std::size_t>(L));
  rep.df.resize(static_cast<std::size_t>(L));
  std::vector<double> a(static_cast<std::size_t>(n0)), b(static_cast<std::size_t>(n1));
  std::int64_t l = 0;
  for (int v = 0; v < V - 1; ++v) {
    for (int u = v + 1; u < V; ++u, ++l) {
      std::size_t ia = 0, ib = 0;
      for (std::size_t i = 0; i < deviations.size(); ++i) {
        const double x = deviations[i](u, v);
        if (group01[i] == 0) {
          a[ia++] = x;
        } else {
          b[ib++] = x;
        }
      }
      const WelchResult w = welch_t_test(a, b);
      rep.t[static_cast<std::size_t>(l)] = w.t;
      rep.p[static_cast<std::size_t>(l)] = w.p;
      rep.df[static_cast<std::size_t>(l)] = w.df;
    }
  }
  rep.reject = bh_reject(rep.p, q);
  return rep;
}

}  // namespace mgraf
