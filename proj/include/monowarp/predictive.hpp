#pragma once

#include <optional>

#include "linalg.hpp"

namespace monowarp {

/// Moment summary of a posterior predictive distribution. `dof` is the
/// Student-t degrees of freedom of the per-draw predictive, or 0 for Gaussian.
struct PredictiveSummary {
  Vector mean;
  Vector var;
  std::optional<SymMatrix> cov;
  int dof = 0;
};

namespace detail {

/// Across-draw mean and covariance of the columns of `locations` (n' x T).
/// Covariance uses divisor T - 1, and is zero for a single draw.
inline void between_draw_moments(const Matrix& locations, bool full_cov, Vector& mean,
                                 Vector& var, std::optional<SymMatrix>& cov) {
  const Index draws = locations.cols();
  mean = locations.rowwise().mean();
  const Matrix centered = locations.colwise() - mean;
  const double denom = draws > 1 ? static_cast<double>(draws - 1) : 1.0;
  var = centered.rowwise().squaredNorm() / denom;
  if (full_cov) cov = SymMatrix(centered * centered.transpose() / denom);
}

}  // namespace detail
}  // namespace monowarp
