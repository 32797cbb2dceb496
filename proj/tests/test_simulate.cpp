#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgraf/metrics.hpp"
#include "mgraf/simulate.hpp"

using namespace mgraf;

TEST_CASE("erdos-renyi sampler") {
  const auto zero = sample_er(6, 0.0, 3, 1);
  for (int i = 0; i < 3; ++i) CHECK(zero[i].cwiseAbs().maxCoeff() == 0.0);

  const auto full = sample_er(6, 1.0, 3, 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(vectorize_lower(full[i]).minCoeff() == 1.0);
    CHECK(full[i].diagonal().cwiseAbs().maxCoeff() == 0.0);
  }

  // density concentrates around p
  const auto er = sample_er(100, 0.5, 50, 7);
  double density = 0.0;
  for (int i = 0; i < er.size(); ++i) density += vectorize_lower(er[i]).mean();
  density /= er.size();
  CHECK(density > 0.49);
  CHECK(density < 0.51);

  // determinism
  const auto again = sample_er(100, 0.5, 50, 7);
  for (int i = 0; i < 50; ++i) CHECK((er[i] - again[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mgraf sampler") {
  // saturated logits give deterministic graphs
  Matrix z = Matrix::Constant(5, 5, 30.0);
  z.diagonal().setZero();
  const std::vector<Matrix> d0{Matrix::Zero(5, 5)};
  const auto complete = sample_mgraf(z, d0, 3);
  CHECK(vectorize_lower(complete[0]).minCoeff() == 1.0);

  // zero model reduces to ER(0.5)
  const std::vector<Matrix> dz(4, Matrix::Zero(40, 40));
  const auto er = sample_mgraf(Matrix::Zero(40, 40), dz, 5);
  double density = 0.0;
  for (int i = 0; i < 4; ++i) density += vectorize_lower(er[i]).mean();
  CHECK(density / 4.0 == doctest::Approx(0.5).epsilon(0.05));

  // deterministic under seed
  const auto a = sample_mgraf(z, d0, 11);
  const auto b = sample_mgraf(z, d0, 11);
  CHECK((a[0] - b[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per-edge frequency converges to sigmoid(Z+D)") {
  const SimulationSpec spec{.nodes = 5, .networks = 1, .rank = 2, .seed = 13};
  const auto truth = make_truth(spec);
  const int reps = 10000;
  std::vector<Matrix> devs(reps, truth.D0[0]);
  const auto stack = sample_mgraf(truth.Z0, devs, 17);
  Matrix freq = Matrix::Zero(5, 5);
  for (int i = 0; i < reps; ++i) freq += stack[i];
  freq /= static_cast<double>(reps);
  for (int v = 0; v < 4; ++v) {
    for (int u = v + 1; u < 5; ++u) {
      const double p = sigmoid(truth.Z0(u, v) + truth.D0[0](u, v));
      const double se = std::sqrt(p * (1.0 - p) / reps);
      CHECK(std::fabs(freq(u, v) - p) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("ground truth construction") {
  const SimulationSpec spec{.nodes = 12, .networks = 5, .rank = 3, .seed = 19};
  const auto truth = make_truth(spec);
  CHECK(truth.Z0(1, 0) == doctest::Approx(spec.within_block_logit));
  CHECK(truth.Z0(7, 0) == doctest::Approx(spec.between_block_logit));
  CHECK(spec.within_block_logit > 0.0);
  CHECK(spec.between_block_logit < 0.0);
  CHECK((truth.Z0 - truth.Z0.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(truth.Z0.diagonal().cwiseAbs().maxCoeff() == 0.0);
  for (const auto& d : truth.D0) {
    Eigen::JacobiSVD<Matrix> svd(d);
    int nonzero = 0;
    for (Eigen::Index s = 0; s < svd.singularValues().size(); ++s) {
      if (svd.singularValues()[s] > 1e-9) ++nonzero;
    }
    CHECK(nonzero <= 3);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  // lambda pattern: decreasing magnitudes, negative tail
  const Vector lam = lambda_pattern(12, 3, 0.55);
  CHECK(lam[0] == doctest::Approx(0.55 * 12));
  CHECK(lam[1] == doctest::Approx(0.55 * 12 * 0.95));
  CHECK(lam[2] == doctest::Approx(-0.55 * 12 * 0.95 * 0.95));
}

TEST_CASE("lower-triangle permutation keeps the multiset and the fraction") {
  const Matrix z = block_z(20, 1.0, -1.0);
  Rng rng(23);
  const Matrix zp = permute_lower_fraction(z, 0.1, rng);
  const Vector a = vectorize_lower(z);
  const Vector b = vectorize_lower(zp);
  // multiset preserved
  std::vector<double> sa(a.data(), a.data() + a.size()), sb(b.data(), b.data() + b.size());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  CHECK(sa == sb);
  // at most ceil(0.1 L) entries changed
  int changed = 0;
  for (Eigen::Index l = 0; l < a.size(); ++l) changed += a[l] != b[l];
  CHECK(changed <= static_cast<int>(std::ceil(0.1 * static_cast<double>(a.size()))));
  // fraction 0 is the identity
  const Matrix same = permute_lower_fraction(z, 0.0, rng);
  CHECK((same - z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scan-rescan generator") {
  SimulationSpec spec{.nodes = 16, .networks = 8, .rank = 2, .seed = 29};
  const auto data = sample_scan_rescan(spec, 1.0, 31);
  CHECK(data.stack.size() == 16);
  CHECK(data.stack.labels.size() == 16);
  CHECK(data.stack.labels[0] == "s0");
  CHECK(data.stack.labels[1] == "s0");
  CHECK(data.stack.ids[0] != data.stack.ids[1]);
  CHECK(static_cast<int>(data.truth.D0.size()) == 8);

  // spread 0 makes all deviations identical (zero)
  const auto flat = sample_scan_rescan(spec, 0.0, 31);
  for (const auto& d : flat.truth.D0) CHECK(d.cwiseAbs().maxCoeff() == 0.0);

  // deterministic
  const auto again = sample_scan_rescan(spec, 1.0, 31);
  for (int i = 0; i < 16; ++i) {
    CHECK((data.stack[i] - again.stack[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("recovery experiment on a small grid") {
  SimulationSpec spec{.nodes = 12, .networks = 0, .rank = 2, .seed = 37};
  RecoveryOptions opts;
  opts.sampled_networks = 5;
  opts.fit.max_iter = 8;
  const auto report = recovery_experiment(spec, {20, 60}, 2, opts);
  REQUIRE(report.cells.size() == 4);
  const auto L = tri_length(12);
  for (const auto& cell : report.cells) {
    CHECK(cell.z_diff.size() == L);
    CHECK(cell.d_diff.size() == std::min(cell.networks, 5) * L);
  }
  // more networks help the common structure
  std::vector<double> abs20, abs60;
  for (const auto& cell : report.cells) {
    for (Eigen::Index l = 0; l < cell.z_diff.size(); ++l) {
      (cell.networks == 20 ? abs20 : abs60).push_back(std::fabs(cell.z_diff[l]));
    }
  }
  CHECK(median_of(abs60) < median_of(abs20));
}
