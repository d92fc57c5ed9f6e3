#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace monowarp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense symmetric matrix. Symmetry is a caller contract; the kernel builders
/// fill each unordered pair once so the two triangles agree bit-for-bit.
using SymMatrix = Eigen::MatrixXd;

/// Lower Cholesky factor of `m + jitter_used * I`.
struct CholFactor {
  Matrix lower;
  double jitter_used = 0.0;

  Index dim() const { return lower.rows(); }
  auto tri() const { return lower.triangularView<Eigen::Lower>(); }
  double log_det() const { return 2.0 * lower.diagonal().array().log().sum(); }
};

/// Relative jitter levels (multiples of the mean diagonal) tried in order.
inline constexpr std::array<double, 4> default_jitter{0.0, 1e-8, 1e-6, 1e-4};
/// Escalation used for kernel matrices inside the samplers.
inline constexpr std::array<double, 3> model_jitter{1e-8, 1e-6, 1e-4};

inline CholFactor cholesky(const SymMatrix& m,
                           std::span<const double> jitter_policy = default_jitter) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw length_mismatch("cholesky: matrix must be square with dim >= 1");
  const double mean_diag = m.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
  Eigen::LLT<Matrix> llt;
  for (double level : jitter_policy) {
    const double j = level * scale;
    if (j == 0.0) {
      llt.compute(m);
    } else {
      Matrix shifted = m;
      shifted.diagonal().array() += j;
      llt.compute(shifted);
    }
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite())
      return {llt.matrixL(), j};
  }
  throw not_positive_definite("cholesky failed at every jitter level (dim " +
                              std::to_string(m.rows()) + ")");
}

/// lower * z with z drawn from `rng` in index order.
inline Vector mvn_sample(const CholFactor& chol, Rng& rng) {
  Vector z(chol.dim());
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol.tri() * z;
}

/// Zero-mean MVN log density with covariance lower * lower^T.
inline double mvn_logpdf(const Vector& z, const CholFactor& chol) {
  if (z.size() != chol.dim()) throw length_mismatch("mvn_logpdf: dimension mismatch");
  const Vector u = chol.tri().solve(z);
  const double n = static_cast<double>(z.size());
  return -0.5 * u.squaredNorm() - 0.5 * chol.log_det() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// (L L^T)^{-1} b
template <typename Derived>
Matrix chol_solve(const CholFactor& chol, const Eigen::MatrixBase<Derived>& b) {
  Matrix x = chol.tri().solve(b);
  chol.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

struct Conditional {
  Vector mean;
  SymMatrix cov;
};

/// Kriging equations. `cross_cov` is train x test. Round-off negatives on the
/// conditional diagonal are clamped to zero.
inline Conditional mvn_conditional(const SymMatrix& train_cov, const Matrix& cross_cov,
                                   const SymMatrix& test_cov, const Vector& train_values) {
  if (cross_cov.rows() != train_cov.rows() || cross_cov.cols() != test_cov.rows() ||
      train_values.size() != train_cov.rows() || test_cov.rows() != test_cov.cols())
    throw length_mismatch("mvn_conditional: non-conformable blocks");
  const CholFactor chol = cholesky(train_cov);
  const Vector alpha = chol_solve(chol, train_values);
  const Matrix v = chol.tri().solve(cross_cov);
  Conditional out;
  out.mean = cross_cov.transpose() * alpha;
  out.cov = test_cov - v.transpose() * v;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  for (Index i = 0; i < out.cov.rows(); ++i)
    if (out.cov(i, i) < 0.0) out.cov(i, i) = 0.0;
  return out;
}

}  // namespace monowarp
