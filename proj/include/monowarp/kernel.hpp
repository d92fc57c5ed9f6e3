#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"

namespace monowarp {

/// Lengthscales of the squared-exponential kernel. Each theta_k divides a
/// squared coordinate distance (no factor of 1/2, no square root). A single
/// entry is broadcast over every input dimension (isotropic kernel).
class KernelParams {
 public:
  explicit KernelParams(Vector theta) : theta_(std::move(theta)) {
    if (theta_.size() < 1) throw invalid_lengthscale("no lengthscales given");
    for (Index k = 0; k < theta_.size(); ++k)
      if (!(theta_[k] > 0.0) || !std::isfinite(theta_[k]))
        throw invalid_lengthscale("lengthscale " + std::to_string(k) +
                                  " must be positive and finite");
  }
  static KernelParams isotropic(double theta) { return KernelParams(Vector::Constant(1, theta)); }

  const Vector& theta() const { return theta_; }
  Index size() const { return theta_.size(); }

  double for_dim(Index k) const { return theta_.size() == 1 ? theta_[0] : theta_[k]; }

  void check_dims(Index p) const {
    if (theta_.size() != 1 && theta_.size() != p)
      throw length_mismatch("kernel has " + std::to_string(theta_.size()) +
                            " lengthscales for " + std::to_string(p) + " inputs");
  }

 private:
  Vector theta_;
};

namespace detail {
inline double sq_exp_exponent(const Matrix& a, Index i, const Matrix& b, Index j,
                              const KernelParams& params) {
  double s = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - b(j, k);
    s += d * d / params.for_dim(k);
  }
  return s;
}
}  // namespace detail

/// C^{ij} = exp(-sum_k (x_ik - x_jk)^2 / theta_k); unit diagonal.
inline SymMatrix sq_exp_cov(const Matrix& x, const KernelParams& params) {
  params.check_dims(x.cols());
  const Index n = x.rows();
  SymMatrix c(n, n);
  for (Index j = 0; j < n; ++j) {
    c(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-detail::sq_exp_exponent(x, i, x, j, params));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

/// n x m block between the rows of x1 and the rows of x2.
inline Matrix sq_exp_cross(const Matrix& x1, const Matrix& x2, const KernelParams& params) {
  if (x1.cols() != x2.cols()) throw length_mismatch("sq_exp_cross: column mismatch");
  params.check_dims(x1.cols());
  Matrix c(x1.rows(), x2.rows());
  for (Index j = 0; j < x2.rows(); ++j)
    for (Index i = 0; i < x1.rows(); ++i)
      c(i, j) = std::exp(-detail::sq_exp_exponent(x1, i, x2, j, params));
  return c;
}

}  // namespace monowarp
