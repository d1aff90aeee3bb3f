#pragma once

#include <Eigen/Dense>

#include <string>

#include "thg/error.hpp"

namespace thg {

using Vector = Eigen::VectorXd;

inline void require_dim(const Vector& x, Eigen::Index dim, const char* what) {
  if (x.size() != dim) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(dim) +
                            ", got " + std::to_string(x.size()));
  }
}

/// ||a - b||_2 / max(||b||_2, tiny)
inline double relative_l2(const Vector& a, const Vector& b) {
  const double denom = b.norm();
  return (a - b).norm() / (denom > 0.0 ? denom : 1e-300);
}

}  // namespace thg
