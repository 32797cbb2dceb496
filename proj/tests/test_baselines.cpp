#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgraf/baselines.hpp"
#include "mgraf/simulate.hpp"
#include "oracles.hpp"

using namespace mgraf;

TEST_CASE("separate factorization: exact at K=V, mean-only at K=0") {
  const auto truth = make_truth(SimulationSpec{.nodes = 8, .networks = 6, .rank = 2, .seed = 131});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 132);

  const auto exact = fit_separate(stack, 8);
  for (int i = 0; i < stack.size(); ++i) {
    CHECK((exact.pi_hat(i) - stack[i]).cwiseAbs().maxCoeff() < 1e-9);
  }

  const auto mean_only = fit_separate(stack, 0);
  const Matrix abar = mean_adjacency(stack);
  for (int i = 0; i < stack.size(); ++i) {
    CHECK((mean_only.pi_hat(i) - abar).cwiseAbs().maxCoeff() == 0.0);
  }

  CHECK_THROWS_AS(fit_separate(stack, 9), std::invalid_argument);
}

TEST_CASE("rank-K truncation is Frobenius-optimal (Eckart-Young Monte Carlo)") {
  Rng rng(137);
  const auto truth = make_truth(SimulationSpec{.nodes = 7, .networks = 4, .rank = 2, .seed = 139});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 140);
  const auto fit = fit_separate(stack, 2);
  const Matrix abar = mean_adjacency(stack);
  for (int i = 0; i < 2; ++i) {
    const Matrix target = stack[i] - abar;
    const double best = (target - fit.deviation[static_cast<std::size_t>(i)]).squaredNorm();
    for (int trial = 0; trial < 1000; ++trial) {
      // random symmetric rank-2 alternative
      const Matrix u = oracle::random_orthonormal(7, 2, rng);
      Vector s(2);
      s << 3.0 * rng.normal(), 3.0 * rng.normal();
      const Matrix cand = u * s.asDiagonal() * u.transpose();
      CHECK((target - cand).squaredNorm() >= best - 1e-10);
    }
  }
}

TEST_CASE("truncation error is non-increasing in K") {
  const auto truth = make_truth(SimulationSpec{.nodes = 10, .networks = 5, .rank = 3, .seed = 149});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 150);
  const Matrix abar = mean_adjacency(stack);
  for (int i = 0; i < stack.size(); ++i) {
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; k += 2) {
      const auto fit = fit_separate(stack, k);
      const double err = (stack[i] - abar - fit.deviation[static_cast<std::size_t>(i)]).norm();
      CHECK(err <= prev + 1e-12);
      prev = err;
    }
  }
}

TEST_CASE("baseline distances: identity, symmetry, mean cancellation") {
  Matrix a = Matrix::Zero(6, 6);
  a(1, 0) = a(0, 1) = 1.0;
  a(3, 2) = a(2, 3) = 1.0;
  Matrix b = Matrix::Zero(6, 6);
  b(2, 0) = b(0, 2) = 1.0;
  const auto stack = NetworkStack::create({a, b, a});
  const auto fit = fit_separate(stack, 3);
  const Matrix d = baseline_distance(fit);
  CHECK(d(0, 2) == doctest::Approx(0.0));  // identical networks
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // equals pairwise pi_hat distances (mean cancels)
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(d(i, j) == doctest::Approx((fit.pi_hat(i) - fit.pi_hat(j)).norm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("clamped probabilities differ only outside [eps, 1-eps]") {
  const auto truth = make_truth(SimulationSpec{.nodes = 9, .networks = 4, .rank = 2, .seed = 151});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 152);
  const auto fit = fit_separate(stack, 3);
  for (int i = 0; i < stack.size(); ++i) {
    const Matrix raw = fit.pi_hat(i);
    const Matrix cl = fit.pi_hat_clamped(i);
    CHECK(cl.minCoeff() >= 1e-6);
    CHECK(cl.maxCoeff() <= 1.0 - 1e-6);
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c < 9; ++c) {
        if (raw(r, c) >= 1e-6 && raw(r, c) <= 1.0 - 1e-6) {
          CHECK(cl(r, c) == raw(r, c));
        }
      }
    }
  }
}
