#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mgraf/cise.hpp"
#include "mgraf/simulate.hpp"
#include "oracles.hpp"

using namespace mgraf;

TEST_CASE("update_Q_step counts positive loadings") {
  Rng rng(53);
  const auto truth = make_truth(SimulationSpec{.nodes = 6, .networks = 1, .rank = 3, .seed = 3});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 4);
  const Matrix z = Matrix::Zero(6, 6);

  Vector lam(3);
  lam << 2.0, -1.5, 0.3;  // two positive entries -> but must be sorted first
  Vector sorted(3);
  sorted << 2.0, 0.3, -1.5;
  const Matrix q = update_Q_step(stack[0], z, sorted);
  REQUIRE(q.cols() == 3);
  const EigenSystem sys = eigen_sorted(stack[0] - pi_of(z));
  CHECK((q.col(0) - sys.vectors.col(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((q.col(1) - sys.vectors.col(1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((q.col(2) - sys.vectors.col(5)).cwiseAbs().maxCoeff() < 1e-12);

  // all positive: plain top-K
  Vector pos(2);
  pos << 3.0, 1.0;
  const Matrix qp = update_Q_step(stack[0], z, pos);
  CHECK((qp - sys.vectors.leftCols(2)).cwiseAbs().maxCoeff() < 1e-12);

  // exact zero counts as non-positive
  Vector with_zero(2);
  with_zero << 1.0, 0.0;
  const Matrix qz = update_Q_step(stack[0], z, with_zero);
  CHECK((qz.col(1) - sys.vectors.col(5)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("update_Q_step maximizes the trace surrogate (Monte Carlo)") {
  Rng rng(59);
  const auto truth = make_truth(SimulationSpec{.nodes = 6, .networks = 1, .rank = 2, .seed = 7});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 8);
  Matrix z = oracle::random_symmetric(6, rng, 0.4);
  z.diagonal().setZero();
  Vector lam(2);
  lam << 1.7, -0.9;  // sorted decreasingly
  const Matrix q = update_Q_step(stack[0], z, lam);
  const double best = trace_surrogate(stack[0], z, q * lam.asDiagonal() * q.transpose());
  for (int trial = 0; trial < 5000; ++trial) {
    const Matrix u = oracle::random_orthonormal(6, 2, rng);
    const double cand = trace_surrogate(stack[0], z, u * lam.asDiagonal() * u.transpose());
    CHECK(cand <= best + 1e-10);
  }
}

TEST_CASE("cise_fit on synthetic data") {
  SimulationSpec spec{.nodes = 16, .networks = 30, .rank = 2, .seed = 21};
  const auto truth = make_truth(spec);
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 22);
  CiseOptions opts;
  opts.epsilon = 0.01;
  auto [model, report] = cise_fit(stack, 2, opts);

  CHECK(static_cast<int>(report.loglik_trace.size()) == report.iterations + 1);
  CHECK(report.converged);
  CHECK(report.logistic_all_converged);
  CHECK(model.rank == 2);
  CHECK(static_cast<int>(model.Q.size()) == 30);
  CHECK(static_cast<int>(model.lambda.size()) == 30);

  // orthonormal bases and sorted loadings
  for (int i = 0; i < 30; ++i) {
    CHECK((model.q_of(i).transpose() * model.q_of(i) - Matrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
    CHECK(model.lambda_of(i)[0] >= model.lambda_of(i)[1]);
  }
  // Z symmetric hollow
  CHECK((model.Z - model.Z.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(model.Z.diagonal().cwiseAbs().maxCoeff() == 0.0);

  // the final trace entry is the joint log-likelihood of the returned model
  CHECK(report.loglik_trace.back() ==
        doctest::Approx(joint_log_likelihood(stack, model)).epsilon(1e-10));

  // fit improves on the initialization baseline
  CHECK(report.loglik_trace.back() > report.loglik_trace.front());

  // convergence means the last relative change is below epsilon
  const auto& tr = report.loglik_trace;
  const double last_rel = std::fabs(tr[tr.size() - 1] - tr[tr.size() - 2]) /
                          std::fabs(tr[tr.size() - 2]);
  CHECK(last_rel < opts.epsilon);
}

TEST_CASE("cise_fit rejects K = V and runs at the K = V-1 cap") {
  SimulationSpec spec{.nodes = 6, .networks = 20, .rank = 2, .seed = 31};
  spec.within_block_logit = 1.0;
  spec.between_block_logit = 0.2;  // dense graphs keep a K = V-1 basis non-degenerate
  const auto truth = make_truth(spec);
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 32);
  CHECK_THROWS_AS(cise_fit(stack, 6), std::invalid_argument);
  CHECK_THROWS_AS(cise_fit(stack, 0), std::invalid_argument);
  CiseOptions opts;
  opts.max_iter = 3;
  auto [model, report] = cise_fit(stack, 5, opts);
  CHECK(model.rank == 5);
}

TEST_CASE("single-network stack runs (Z and D confounded)") {
  const auto truth = make_truth(SimulationSpec{.nodes = 8, .networks = 1, .rank = 2, .seed = 37});
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 38);
  CiseOptions opts;
  opts.max_iter = 5;
  auto [model, report] = cise_fit(stack, 2, opts);
  CHECK(model.num_networks == 1);
  CHECK(static_cast<int>(report.loglik_trace.size()) == report.iterations + 1);
}

TEST_CASE("node permutation equivariance") {
  SimulationSpec spec{.nodes = 10, .networks = 12, .rank = 2, .seed = 41};
  const auto truth = make_truth(spec);
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 42);

  // permute node labels
  std::vector<int> perm{3, 1, 4, 0, 9, 7, 2, 8, 5, 6};
  Matrix p = Matrix::Zero(10, 10);
  for (int i = 0; i < 10; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;
  std::vector<Matrix> permuted;
  for (int i = 0; i < stack.size(); ++i) permuted.push_back(p * stack[i] * p.transpose());
  const auto pstack = NetworkStack::create(permuted);

  CiseOptions opts;
  opts.max_iter = 4;
  opts.epsilon = 1e-6;
  auto [m1, r1] = cise_fit(stack, 2, opts);
  auto [m2, r2] = cise_fit(pstack, 2, opts);
  REQUIRE(r1.iterations == r2.iterations);
  CHECK((p * m1.Z * p.transpose() - m2.Z).cwiseAbs().maxCoeff() < 1e-6);
  for (int i = 0; i < stack.size(); ++i) {
    CHECK((p * m1.deviation(i) * p.transpose() - m2.deviation(i)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("logistic step never decreases the penalized posterior inside the loop") {
  SimulationSpec spec{.nodes = 10, .networks = 8, .rank = 2, .seed = 43};
  const auto truth = make_truth(spec);
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 44);
  CiseOptions opts;
  CiseState state(stack, Variant::FullLambda, 2, opts);
  for (int it = 0; it < 3; ++it) {
    state.step_logistic();
    const auto& trace = state.logistic_solution().objective_trace;
    for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] >= trace[t - 1]);
    state.step_q();
  }
}

TEST_CASE("deterministic across repeated runs and thread counts") {
  SimulationSpec spec{.nodes = 12, .networks = 10, .rank = 2, .seed = 47};
  const auto truth = make_truth(spec);
  const auto stack = sample_mgraf(truth.Z0, truth.D0, 48);
  CiseOptions opts;
  opts.max_iter = 3;
  auto [m1, r1] = cise_fit(stack, 2, opts);
  const int saved = max_threads();
  set_max_threads(1);
  auto [m2, r2] = cise_fit(stack, 2, opts);
  set_max_threads(saved);
  CHECK((m1.Z - m2.Z).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < m1.lambda.size(); ++i) {
    CHECK((m1.lambda[i] - m2.lambda[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}
