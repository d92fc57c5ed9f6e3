#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace monowarp {

struct EssConfig {
  int max_shrinks = 100;
};

struct EssResult {
  Vector z;
  double loglik = 0.0;
  /// accepted angle; carry auxiliary coordinates with ellipse_point(..., angle)
  double angle = 0.0;
  /// rejected proposals before acceptance
  int shrinks = 0;
};

inline Vector ellipse_point(const Vector& current, const Vector& prior, double angle) {
  return current * std::cos(angle) + prior * std::sin(angle);
}

/// One elliptical slice sampling update given an already drawn prior vector.
/// Random numbers are consumed as: threshold, initial angle, then one uniform
/// per bracket shrink.
template <typename LogLik>
EssResult ess_update(const Vector& z_prev, double loglik_prev, const Vector& z_prior,
                     LogLik&& loglik, Rng& rng, const EssConfig& cfg = {}) {
  if (cfg.max_shrinks < 1) throw length_mismatch("EssConfig.max_shrinks must be >= 1");
  if (!std::isfinite(loglik_prev))
    throw degenerate_input("ess_update: current state has non-finite log-likelihood");
  const double threshold = std::log(rng.uniform()) + loglik_prev;
  double angle = rng.uniform(0.0, two_pi);
  double lo = angle - two_pi;
  double hi = angle;
  for (int shrinks = 0;; ++shrinks) {
    Vector proposal = ellipse_point(z_prev, z_prior, angle);
    const double ll = loglik(proposal);
    if (ll > threshold) return {std::move(proposal), ll, angle, shrinks};
    if (shrinks + 1 >= cfg.max_shrinks)
      throw shrink_limit_exceeded("ess_update: no acceptable proposal after " +
                                  std::to_string(cfg.max_shrinks) + " shrinks");
    (angle < 0.0 ? lo : hi) = angle;
    angle = rng.uniform(lo, hi);
  }
}

/// Draws the prior vector from `prior_chol` first, then updates.
template <typename LogLik>
EssResult ess_update(const Vector& z_prev, double loglik_prev, const CholFactor& prior_chol,
                     LogLik&& loglik, Rng& rng, const EssConfig& cfg = {}) {
  const Vector z_prior = mvn_sample(prior_chol, rng);
  return ess_update(z_prev, loglik_prev, z_prior, std::forward<LogLik>(loglik), rng, cfg);
}

template <typename LogLik>
EssResult ess_update(const Vector& z_prev, const CholFactor& prior_chol, LogLik&& loglik,
                     Rng& rng, const EssConfig& cfg = {}) {
  const double current = loglik(z_prev);
  return ess_update(z_prev, current, prior_chol, std::forward<LogLik>(loglik), rng, cfg);
}

/// Factorized block prior over (train, test) coordinates for carrying
/// test-site values along the ESS ellipse.
class JointPrior {
 public:
  JointPrior(const SymMatrix& train_cov, const Matrix& cross_cov, const SymMatrix& test_cov,
             std::span<const double> jitter_policy = default_jitter)
      : n_train_(train_cov.rows()) {
    const Index n_test = test_cov.rows();
    if (cross_cov.rows() != n_train_ || cross_cov.cols() != n_test)
      throw length_mismatch("JointPrior: cross block must be n_train x n_test");
    SymMatrix full(n_train_ + n_test, n_train_ + n_test);
    full.topLeftCorner(n_train_, n_train_) = train_cov;
    full.topRightCorner(n_train_, n_test) = cross_cov;
    full.bottomLeftCorner(n_test, n_train_) = cross_cov.transpose();
    full.bottomRightCorner(n_test, n_test) = test_cov;
    chol_ = cholesky(full, jitter_policy);
  }

  std::pair<Vector, Vector> draw(Rng& rng) const {
    const Vector z = mvn_sample(chol_, rng);
    return {z.head(n_train_), z.tail(z.size() - n_train_)};
  }

  const CholFactor& factor() const { return chol_; }

 private:
  Index n_train_;
  CholFactor chol_;
};

inline std::pair<Vector, Vector> joint_prior_draw(const SymMatrix& train_cov,
                                                  const Matrix& cross_cov,
                                                  const SymMatrix& test_cov, Rng& rng) {
  return JointPrior(train_cov, cross_cov, test_cov).draw(rng);
}

}  // namespace monowarp
