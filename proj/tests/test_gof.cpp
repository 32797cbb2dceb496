#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgraf/gof.hpp"
#include "mgraf/simulate.hpp"
#include "oracles.hpp"

using namespace mgraf;

namespace {

// Trapezoidal ROC integration, as an independent check of the rank AUC.
double trapezoid_auc(const std::vector<double>& score, const std::vector<std::uint8_t>& y) {
  std::vector<double> uniq = score;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  double n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? n_pos : n_neg) += 1.0;
  std::vector<std::pair<double, double>> roc;  // (fpr, tpr), threshold descending
  roc.emplace_back(0.0, 0.0);
  for (auto it = uniq.rbegin(); it != uniq.rend(); ++it) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (score[i] >= *it) (y[i] ? tp : fp) += 1.0;
    }
    roc.emplace_back(fp / n_neg, tp / n_pos);
  }
  double auc = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    auc += (roc[i].first - roc[i - 1].first) * 0.5 * (roc[i].second + roc[i - 1].second);
  }
  return auc;
}

}  // namespace

TEST_CASE("auc/rss: perfect, uninformative, oracle agreement") {
  Rng rng(107);
  Matrix a = Matrix::Zero(8, 8);
  for (int v = 0; v < 7; ++v) {
    for (int u = v + 1; u < 8; ++u) {
      const double x = rng.bernoulli(0.5) ? 1.0 : 0.0;
      a(u, v) = x;
      a(v, u) = x;
    }
  }
  // perfect prediction
  const AucRss perfect = auc_rss_one(a, a);
  CHECK(perfect.auc_defined);
  CHECK(perfect.auc == doctest::Approx(1.0));
  CHECK(perfect.rss == doctest::Approx(0.0));

  // constant 0.5 predictor
  Matrix half = Matrix::Constant(8, 8, 0.5);
  half.diagonal().setZero();
  const AucRss flat = auc_rss_one(a, half);
  CHECK(flat.auc == doctest::Approx(0.5));
  CHECK(flat.rss == doctest::Approx(std::sqrt(static_cast<double>(tri_length(8))) * 0.5));

  // rank AUC agrees with trapezoidal ROC integration (with ties)
  const Vector ya = vectorize_lower(a);
  std::vector<double> score(static_cast<std::size_t>(ya.size()));
  std::vector<std::uint8_t> truth(static_cast<std::size_t>(ya.size()));
  for (Eigen::Index l = 0; l < ya.size(); ++l) {
    score[static_cast<std::size_t>(l)] = std::round(rng.uniform01() * 4.0) / 4.0;  // force ties
    truth[static_cast<std::size_t>(l)] = ya[l] != 0.0;
  }
  CHECK(mann_whitney_auc(score, truth) ==
        doctest::Approx(trapezoid_auc(score, truth)).epsilon(1e-12));

  // all-ones network: AUC undefined, reported missing
  Matrix ones = Matrix::Ones(4, 4);
  ones.diagonal().setZero();
  const AucRss missing = auc_rss_one(ones, half.topLeftCorner(4, 4));
  CHECK_FALSE(missing.auc_defined);

  // AUC invariant under strictly increasing transforms of the scores
  std::vector<double> squashed(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) squashed[i] = std::tanh(2.0 * score[i] - 1.0);
  CHECK(mann_whitney_auc(squashed, truth) ==
        doctest::Approx(mann_whitney_auc(score, truth)).epsilon(1e-12));
}

TEST_CASE("topology summaries on canonical graphs") {
  // triangle
  Matrix k3 = Matrix::Ones(3, 3);
  k3.diagonal().setZero();
  const TopologySummary t3 = topology_summary(k3);
  CHECK(t3.density == doctest::Approx(1.0));
  CHECK(t3.avg_path_length == doctest::Approx(1.0));
  CHECK(t3.transitivity == doctest::Approx(1.0));
  CHECK(t3.degree_mean == doctest::Approx(2.0));
  CHECK(t3.disconnected_fraction == doctest::Approx(0.0));

  // path on 3 nodes: distances 1,1,2 -> APL 4/3; no triangles
  Matrix path = Matrix::Zero(3, 3);
  path(1, 0) = path(0, 1) = 1.0;
  path(2, 1) = path(1, 2) = 1.0;
  const TopologySummary tp = topology_summary(path);
  CHECK(tp.avg_path_length == doctest::Approx(4.0 / 3.0));
  CHECK(tp.transitivity == doctest::Approx(0.0));

  // empty graph: APL undefined
  const TopologySummary te = topology_summary(Matrix::Zero(4, 4));
  CHECK(te.density == 0.0);
  CHECK(te.degree_mean == 0.0);
  CHECK_FALSE(te.apl_defined);
  CHECK(te.disconnected_fraction == doctest::Approx(1.0));

  // identities: degree_mean = density*(V-1); transitivity via trace(A^3)
  Rng rng(109);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix a = Matrix::Zero(10, 10);
    for (int v = 0; v < 9; ++v) {
      for (int u = v + 1; u < 10; ++u) {
        const double x = rng.bernoulli(0.4) ? 1.0 : 0.0;
        a(u, v) = x;
        a(v, u) = x;
      }
    }
    const TopologySummary t = topology_summary(a);
    CHECK(t.degree_mean == doctest::Approx(t.density * 9.0).epsilon(1e-12));
    double triples = 0.0;
    for (int v = 0; v < 10; ++v) {
      const double deg = a.row(v).sum();
      triples += deg * (deg - 1.0);
    }
    if (triples > 0) {
      CHECK(t.transitivity == doctest::Approx((a * a * a).trace() / triples).epsilon(1e-12));
    }
  }
}

TEST_CASE("predictive topology check: degenerate probabilities reproduce the data") {
  Rng rng(113);
  Matrix a = Matrix::Zero(8, 8);
  for (int v = 0; v < 7; ++v) {
    for (int u = v + 1; u < 8; ++u) {
      const double x = rng.bernoulli(0.5) ? 1.0 : 0.0;
      a(u, v) = x;
      a(v, u) = x;
    }
  }
  const auto stack = NetworkStack::create({a});
  const auto check = predictive_topology_check({a}, stack, 20, 5);
  // probabilities 0/1: every replicate equals the observation
  for (int m = 0; m < kTopologyMeasures; ++m) {
    if (std::isnan(check.observed(0, m))) continue;
    CHECK(check.pred_mean(0, m) == doctest::Approx(check.observed(0, m)));
    CHECK(check.lo(0, m) == doctest::Approx(check.hi(0, m)));
  }
}

TEST_CASE("suggest_bend finds the corner of a piecewise-linear curve") {
  // steep rise to K=3, flat afterwards
  const std::vector<int> grid{1, 2, 3, 4, 5, 6};
  const std::vector<double> values{-100.0, -60.0, -20.0, -19.0, -18.0, -17.0};
  const auto bend = suggest_bend(grid, values);
  REQUIRE(bend.has_value());
  CHECK(*bend == 3);

  CHECK_FALSE(suggest_bend({1}, {0.0}).has_value());
  CHECK_FALSE(suggest_bend({1, 2}, {0.0, 1.0}).has_value());
}

TEST_CASE("elbow scan on a fixed synthetic stack") {
  SimulationSpec spec{.nodes = 14, .networks = 40, .rank = 2, .seed = 127};
  spec.deviation_scale = 1.0;
  const auto truth = make_truth(spec);
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 128);
  CiseOptions opts;
  opts.max_iter = 20;
  const auto scan = elbow_scan_stack(stack, {1, 2, 3, 4}, Variant::FullLambda, opts);
  REQUIRE(scan.mean_ll.size() == 4);
  CHECK(scan.failed_fits == 0);
  // log-likelihood rises with K (nested models, same pipeline)
  CHECK(scan.mean_ll[1] >= scan.mean_ll[0]);
  REQUIRE(scan.suggested_k.has_value());
  CHECK(*scan.suggested_k == 2);
  CHECK(scan.aic.size() == 4);
  CHECK(scan.bic.size() == 4);

  CHECK_THROWS_AS(elbow_scan_stack(stack, {}, Variant::FullLambda, opts),
                  std::invalid_argument);
  CHECK_THROWS_AS(elbow_scan_stack(stack, {2, 2}, Variant::FullLambda, opts),
                  std::invalid_argument);
}
