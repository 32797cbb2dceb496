#pragma once

// Reduced M-GRAF variants.
//
// Shared Lambda: one K-vector of loadings for all networks (K coefficients
// instead of nK); its predictor spread is taken over the concatenated column
// across networks. Kept sorted decreasingly, which is what the projection
// rule for a new network assumes.
//
// Shared Q: one basis for all networks with per-network loadings; the basis
// update is the greedy sequential eigenvector selection over
// W_k = sum_i lambda_ik (A_i - pi(Z)) and reaches a local maximum only.

#include <utility>

#include "mgraf/cise.hpp"
#include "mgraf/model.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

inline std::pair<MgrafModel, FitReport> fit_shared_lambda(const NetworkStack& stack, int K,
                                                          const CiseOptions& opts = {}) {
  return fit_mgraf(stack, Variant::SharedLambda, K, opts);
}

inline std::pair<MgrafModel, FitReport> fit_shared_q(const NetworkStack& stack, int K,
                                                     const CiseOptions& opts = {}) {
  return fit_mgraf(stack, Variant::SharedQ, K, opts);
}

// Latent basis for a network outside the training set, under the shared-
// Lambda model: no refit, just the signed eigenvector selection against the
// fitted common structure.
inline Matrix project_new_network(const MgrafModel& model, const Matrix& a_star,
                                  EigenBackend backend = EigenBackend::Auto) {
  require(model.variant == Variant::SharedLambda,
          "project_new_network: model must be the shared-Lambda variant");
  require(a_star.rows() == model.num_nodes && a_star.cols() == model.num_nodes,
          "project_new_network: node count mismatch");
  validate_adjacency(a_star, "project_new_network input");
  const Vector& lam = model.lambda[0];
  int k_pos = 0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) k_pos += lam[k] > 0.0 ? 1 : 0;
  return select_signed_eigvecs(a_star - pi_of(model.Z), k_pos, model.rank - k_pos, backend);
}

}  // namespace mgraf
