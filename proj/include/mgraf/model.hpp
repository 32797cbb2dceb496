#pragma once

// M-GRAF model state and likelihood primitives. The logit of each network's
// edge-probability matrix is Z + D_i with D_i = Q_i Lambda_i Q_i', rank K.
// Three variants: per-network (Q_i, Lambda_i); shared Lambda; shared Q.

#include <cmath>
#include <string>
#include <vector>

#include "mgraf/netdata.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

enum class Variant { FullLambda, SharedLambda, SharedQ };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::FullLambda: return "full";
    case Variant::SharedLambda: return "shared-lambda";
    case Variant::SharedQ: return "shared-q";
  }
  return "full";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "full") return Variant::FullLambda;
  if (s == "shared-lambda") return Variant::SharedLambda;
  if (s == "shared-q") return Variant::SharedQ;
  throw std::invalid_argument("unknown variant '" + s + "' (full|shared-lambda|shared-q)");
}

// ---------------------------------------------------------------------------
// Links

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) {
  require(p > 0.0 && p < 1.0, "logit: argument must lie strictly in (0,1)");
  return std::log(p) - std::log1p(-p);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

// Bernoulli log-likelihood of y in {0,1} with logit eta.
inline double bernoulli_loglik(double y, double eta) { return y * eta - softplus(eta); }

// Entrywise logistic function with zeroed diagonal.
inline Matrix pi_of(const Matrix& z) {
  Matrix p = z.unaryExpr([](double v) { return sigmoid(v); });
  p.diagonal().setZero();
  return p;
}

// ---------------------------------------------------------------------------
// Model

struct MgrafModel {
  Variant variant = Variant::FullLambda;
  int num_nodes = 0;
  int num_networks = 0;
  int rank = 0;
  double gamma = 1.0;
  Matrix Z;                    // V x V symmetric, zero diagonal
  std::vector<Matrix> Q;       // n entries, or 1 when shared (SharedQ)
  std::vector<Vector> lambda;  // n entries, or 1 when shared (SharedLambda)

  const Matrix& q_of(int i) const { return Q.size() == 1 ? Q[0] : Q[static_cast<std::size_t>(i)]; }
  const Vector& lambda_of(int i) const {
    return lambda.size() == 1 ? lambda[0] : lambda[static_cast<std::size_t>(i)];
  }
  Matrix deviation(int i) const {
    const Matrix& q = q_of(i);
    return q * lambda_of(i).asDiagonal() * q.transpose();
  }
};

struct FitReport {
  std::vector<double> loglik_trace;  // length iterations + 1 (entry 0: initialization)
  bool converged = false;
  int iterations = 0;
  double epsilon = 0.0;
  double gamma = 0.0;
  bool logistic_all_converged = true;
  std::vector<double> logistic_seconds;  // per iteration
  std::vector<double> eigen_seconds;     // per iteration
};

// ---------------------------------------------------------------------------
// Likelihood pieces

inline Matrix edge_prob_matrix(const MgrafModel& model, int i) {
  require(i >= 0 && i < model.num_networks, "edge_prob_matrix: network index out of range");
  Matrix eta = model.Z + model.deviation(i);
  return pi_of(eta);
}

// Joint log-likelihood over the strict lower triangles (Bernoulli).
inline double joint_log_likelihood(const NetworkStack& stack, const MgrafModel& model) {
  require(stack.nodes() == model.num_nodes, "joint_log_likelihood: node count mismatch");
  require(stack.size() == model.num_networks, "joint_log_likelihood: network count mismatch");
  const int V = stack.nodes();
  double ll = 0.0;
  for (int i = 0; i < stack.size(); ++i) {
    const Matrix eta = model.Z + model.deviation(i);
    const Matrix& a = stack[i];
    for (int v = 0; v < V - 1; ++v) {
      for (int u = v + 1; u < V; ++u) {
        ll += bernoulli_loglik(a(u, v), eta(u, v));
      }
    }
  }
  return ll;
}

// 0.5 * tr((A - pi(Z)) D); diagonals of A and pi(Z) are zero.
inline double trace_surrogate(const Matrix& a, const Matrix& z, const Matrix& d) {
  require(a.rows() == z.rows() && z.rows() == d.rows(), "trace_surrogate: shape mismatch");
  const Matrix residual = a - pi_of(z);
  return 0.5 * (residual.transpose() * d).trace();
}

// Same surrogate given a precomputed residual A - pi(Z).
inline double trace_surrogate_residual(const Matrix& residual, const Matrix& d) {
  return 0.5 * (residual.transpose() * d).trace();
}

inline std::vector<Matrix> deviance_matrices(const MgrafModel& model) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(model.num_networks));
  for (int i = 0; i < model.num_networks; ++i) out.push_back(model.deviation(i));
  return out;
}

}  // namespace mgraf
