#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mgraf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Precondition failures (bad arguments, contract violations).
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Data/environment failures (unreadable files, malformed input, numerics).
inline void ensure(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace mgraf
