#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "ess.hpp"
#include "kernel.hpp"
#include "linalg.hpp"
#include "predictive.hpp"
#include "refinterp.hpp"
#include "rng.hpp"

namespace monowarp {

/// Gamma(shape, rate) priors on each scale nu_j and each lengthscale theta_j.
struct PriorConfig {
  double alpha_nu = 1e-3;
  double beta_nu = 1e-3;
  double alpha_theta = 1.5;
  double beta_theta = 5.0;

  void validate() const {
    if (!(alpha_nu > 0 && beta_nu > 0 && alpha_theta > 0 && beta_theta > 0))
      throw config_error("prior shape/rate parameters must be positive");
  }
};

struct MCMCConfig {
  int total = 5000;
  int burn = 1000;
  int thin = 10;
  int n_g = 50;
  std::uint64_t seed = 1;
  MonoVariant variant = MonoVariant::exp;
  EssConfig ess{};

  void validate() const {
    if (total < 1) throw config_error("total must be >= 1");
    if (burn < 0 || burn >= total) throw config_error("burn must satisfy 0 <= burn < total");
    if (thin < 1) throw config_error("thin must be >= 1");
    if (n_g < 2) throw config_error("n_g must be >= 2");
  }
  /// floor((total - burn) / thin)
  int retained_count() const { return (total - burn) / thin; }
  bool keeps(int iteration) const {
    return iteration > burn && (iteration - burn) % thin == 0;
  }
};

inline double log_gamma_density(double x, double shape, double rate) {
  return (shape - 1.0) * std::log(x) - rate * x + shape * std::log(rate) - std::lgamma(shape);
}

/// Uniform[x/2, 2x] random-walk proposal shared by every positive
/// hyperparameter. Returns the proposal and adds the log Jacobian x / x'.
inline double propose_scale(double current, Rng& rng, double& log_jacobian) {
  const double proposal = rng.uniform(0.5 * current, 2.0 * current);
  log_jacobian = std::log(current) - std::log(proposal);
  return proposal;
}

struct SummaryStats {
  double mu_hat = 0.0;
  double s2 = 0.0;
};

namespace detail {

/// Residual location/scale of r given the additive degrees-of-freedom loss p.
inline SummaryStats residual_stats(const Vector& r, Index p) {
  const Index n = r.size();
  if (n <= p) throw too_few_observations("need n > p observations");
  SummaryStats out;
  out.mu_hat = r.mean();
  out.s2 = (r.array() - out.mu_hat).square().sum() / static_cast<double>(n - p);
  return out;
}

inline double log_marglik_from_stats(const SummaryStats& st, Index n, Index p) {
  if (st.s2 < 1e-300)
    throw degenerate_residuals("residual scale vanished (perfect fit)");
  const double dof = static_cast<double>(n - p);
  return -0.5 * dof * std::log(dof * st.s2 / 2.0);
}

}  // namespace detail

/// y_i - sum_j nu_j (f_ij - 1/2): location and divisor-(n - p) scale.
inline SummaryStats summary_stats(const Vector& y, const Matrix& f_n, const Vector& nu) {
  if (f_n.rows() != y.size() || f_n.cols() != nu.size())
    throw length_mismatch("summary_stats: y, f_n and nu disagree in size");
  const Vector r = y - (f_n.array() - 0.5).matrix() * nu;
  return detail::residual_stats(r, nu.size());
}

inline SummaryStats summary_stats(const Vector& y, const Vector& f_n, double nu) {
  return summary_stats(y, Matrix(f_n), Vector::Constant(1, nu));
}

/// Log of the collapsed likelihood (up to a constant fixed by n and p):
/// -((n - p) / 2) log((n - p) s^2 / 2). Only differences are meaningful.
inline double log_marglik(const Vector& y, const Matrix& f_n, const Vector& nu) {
  return detail::log_marglik_from_stats(summary_stats(y, f_n, nu), y.size(), nu.size());
}

struct MonoDraw {
  Matrix z_g;  // n_g x p
  Vector nu;
  Vector theta;
  double mu_hat = 0.0;
  double s2 = 0.0;
};

struct AcceptanceCounts {
  long proposed = 0;
  long accepted = 0;
  long factor_failures = 0;  // lengthscale proposals whose kernel would not factor
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct MonoChain {
  RefGrid grid = RefGrid::uniform(50);
  MonoVariant variant = MonoVariant::exp;
  Index n = 0;
  Index p = 0;
  MCMCConfig mcmc;
  PriorConfig prior;
  std::vector<MonoDraw> draws;
  std::vector<AcceptanceCounts> nu_moves;     // per coordinate
  std::vector<AcceptanceCounts> theta_moves;  // per coordinate
  long ess_proposals = 0;
  long ess_updates = 0;
  std::vector<double> loglik_trace;  // collapsed log-likelihood after each sweep

  int dof() const { return static_cast<int>(n - p); }
};

/// Metropolis-within-Gibbs state for the additive monotone GP. Each column j
/// of z_g carries an independent reference-process prior N(0, C_g(theta_j)).
class MonoGpSampler {
 public:
  MonoGpSampler(const Matrix& x, const Vector& y, const PriorConfig& prior,
                const MCMCConfig& mcmc)
      : y_(y), prior_(prior), mcmc_(mcmc), grid_(RefGrid::uniform(mcmc.n_g)) {
    prior.validate();
    mcmc.validate();
    if (x.rows() != y.size()) throw length_mismatch("X and y row counts differ");
    if (x.cols() < 1) throw length_mismatch("X needs at least one column");
    if (!y.allFinite()) throw non_finite_response("response contains NaN or Inf");
    if (x.rows() <= x.cols()) throw too_few_observations("need n > p observations");
    if (!x.allFinite() || x.minCoeff() < -1e-12 || x.maxCoeff() > 1.0 + 1e-12)
      throw degenerate_input("training inputs must be coded to [0, 1]");
    const Index p = x.cols();
    const Index ng = grid_.size();
    plans_.reserve(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) plans_.push_back(fo_approx_init(grid_, x.col(j)));
    z_g_ = Matrix::Zero(ng, p);
    // the shift-by-minimum transform is undefined for a constant vector
    if (mcmc_.variant == MonoVariant::linear) z_g_.colwise() = grid_.nodes();
    nu_ = Vector::Ones(p);
    theta_ = Vector::Constant(p, 0.1);
    f_n_.resize(x.rows(), p);
    for (Index j = 0; j < p; ++j) {
      f_n_.col(j) = monoref(plans_[static_cast<std::size_t>(j)], z_g_.col(j), mcmc_.variant);
      chol_.push_back(grid_factor(theta_[j]));
    }
    nu_moves_.resize(static_cast<std::size_t>(p));
    theta_moves_.resize(static_cast<std::size_t>(p));
    loglik_ = log_marglik(y_, f_n_, nu_);
  }

  Index p() const { return z_g_.cols(); }
  const Matrix& z_g() const { return z_g_; }
  const Matrix& f_n() const { return f_n_; }
  const Vector& nu() const { return nu_; }
  const Vector& theta() const { return theta_; }
  double loglik() const { return loglik_; }
  const RefGrid& grid() const { return grid_; }

  /// Overwrites the Gibbs state; derived quantities are recomputed.
  void set_state(const Matrix& z_g, const Vector& nu, const Vector& theta) {
    if (z_g.rows() != grid_.size() || z_g.cols() != p() || nu.size() != p() || theta.size() != p())
      throw length_mismatch("set_state: shapes do not match the sampler");
    z_g_ = z_g;
    nu_ = nu;
    theta_ = theta;
    for (Index j = 0; j < p(); ++j) {
      const auto col = static_cast<std::size_t>(j);
      f_n_.col(j) = monoref(plans_[col], z_g_.col(j), mcmc_.variant);
      chol_[col] = grid_factor(theta_[j]);
    }
    loglik_ = log_marglik(y_, f_n_, nu_);
  }

  /// ESS on column j with every other column held fixed.
  EssResult ess_latent_step(Index j, Rng& rng) {
    const auto col = static_cast<std::size_t>(j);
    const Vector partial = y_ - (f_n_.array() - 0.5).matrix() * nu_ +
                           nu_[j] * (f_n_.col(j).array() - 0.5).matrix();
    const Index n = y_.size();
    const Index p = this->p();
    const double nu_j = nu_[j];
    auto loglik = [&](const Vector& z) {
      const Vector f = monoref(plans_[col], z, mcmc_.variant);
      const Vector r = partial - nu_j * (f.array() - 0.5).matrix();
      return detail::log_marglik_from_stats(detail::residual_stats(r, p), n, p);
    };
    EssResult res = ess_update(Vector(z_g_.col(j)), loglik_, chol_[col], loglik, rng, mcmc_.ess);
    z_g_.col(j) = res.z;
    f_n_.col(j) = monoref(plans_[col], res.z, mcmc_.variant);
    loglik_ = res.loglik;
    ess_updates_ += 1;
    ess_proposals_ += res.shrinks + 1;
    return res;
  }

  bool mh_step_nu(Index j, Rng& rng) {
    auto& moves = nu_moves_[static_cast<std::size_t>(j)];
    double log_jac = 0.0;
    const double current = nu_[j];
    const double proposal = propose_scale(current, rng, log_jac);
    Vector nu_new = nu_;
    nu_new[j] = proposal;
    const double ll_new = log_marglik(y_, f_n_, nu_new);
    const double log_alpha = ll_new - loglik_ +
                             log_gamma_density(proposal, prior_.alpha_nu, prior_.beta_nu) -
                             log_gamma_density(current, prior_.alpha_nu, prior_.beta_nu) + log_jac;
    moves.proposed += 1;
    if (std::log(rng.uniform()) < log_alpha) {
      nu_ = std::move(nu_new);
      loglik_ = ll_new;
      moves.accepted += 1;
      return true;
    }
    return false;
  }

  bool mh_step_theta(Index j, Rng& rng) {
    const auto col = static_cast<std::size_t>(j);
    auto& moves = theta_moves_[col];
    double log_jac = 0.0;
    const double current = theta_[j];
    const double proposal = propose_scale(current, rng, log_jac);
    // the acceptance uniform is drawn unconditionally so the stream layout
    // does not depend on factorization outcomes
    const double log_u = std::log(rng.uniform());
    moves.proposed += 1;
    CholFactor chol_new;
    try {
      chol_new = grid_factor(proposal);
    } catch (const not_positive_definite&) {
      moves.factor_failures += 1;
      return false;
    }
    const Vector z = z_g_.col(j);
    const double log_alpha = mvn_logpdf(z, chol_new) - mvn_logpdf(z, chol_[col]) +
                             log_gamma_density(proposal, prior_.alpha_theta, prior_.beta_theta) -
                             log_gamma_density(current, prior_.alpha_theta, prior_.beta_theta) +
                             log_jac;
    if (log_u < log_alpha) {
      theta_[j] = proposal;
      chol_[col] = std::move(chol_new);
      moves.accepted += 1;
      return true;
    }
    return false;
  }

  /// Latents (ascending j), then every nu_j, then every theta_j.
  void sweep(Rng& rng) {
    for (Index j = 0; j < p(); ++j) ess_latent_step(j, rng);
    for (Index j = 0; j < p(); ++j) mh_step_nu(j, rng);
    for (Index j = 0; j < p(); ++j) mh_step_theta(j, rng);
  }

  MonoDraw snapshot() const {
    const SummaryStats st = summary_stats(y_, f_n_, nu_);
    return {z_g_, nu_, theta_, st.mu_hat, st.s2};
  }

  /// Moves bookkeeping and draws into a chain skeleton.
  MonoChain make_chain() const {
    MonoChain chain;
    chain.grid = grid_;
    chain.variant = mcmc_.variant;
    chain.n = y_.size();
    chain.p = p();
    chain.mcmc = mcmc_;
    chain.prior = prior_;
    chain.nu_moves = nu_moves_;
    chain.theta_moves = theta_moves_;
    chain.ess_proposals = ess_proposals_;
    chain.ess_updates = ess_updates_;
    return chain;
  }

 private:
  CholFactor grid_factor(double theta) const {
    return cholesky(sq_exp_cov(grid_.as_design(), KernelParams::isotropic(theta)), model_jitter);
  }

  Vector y_;
  PriorConfig prior_;
  MCMCConfig mcmc_;
  RefGrid grid_;
  std::vector<InterpPlan> plans_;
  std::vector<CholFactor> chol_;
  Matrix z_g_;
  Matrix f_n_;
  Vector nu_;
  Vector theta_;
  double loglik_ = 0.0;
  std::vector<AcceptanceCounts> nu_moves_;
  std::vector<AcceptanceCounts> theta_moves_;
  long ess_proposals_ = 0;
  long ess_updates_ = 0;
};

/// Runs the full chain; x must be coded to [0, 1].
inline MonoChain fit_monogp(const Matrix& x, const Vector& y, const PriorConfig& prior = {},
                            const MCMCConfig& mcmc = {}) {
  MonoGpSampler sampler(x, y, prior, mcmc);
  Rng rng(mcmc.seed);
  std::vector<MonoDraw> draws;
  draws.reserve(static_cast<std::size_t>(mcmc.retained_count()));
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(mcmc.total));
  for (int t = 1; t <= mcmc.total; ++t) {
    sampler.sweep(rng);
    trace.push_back(sampler.loglik());
    if (mcmc.keeps(t)) draws.push_back(sampler.snapshot());
  }
  MonoChain chain = sampler.make_chain();
  chain.draws = std::move(draws);
  chain.loglik_trace = std::move(trace);
  return chain;
}

/// Single-input convenience entry point.
inline MonoChain fit_monogp(const Vector& x, const Vector& y, const PriorConfig& prior = {},
                            const MCMCConfig& mcmc = {}) {
  return fit_monogp(Matrix(x), y, prior, mcmc);
}

/// Per-draw Student-t predictive parameters at n' query rows.
struct StudentTDraws {
  Matrix location;  // n' x T
  Vector scale2;    // T; (1 + 1/n) s^2
  int dof = 0;
};

namespace detail {
inline std::vector<InterpPlan> query_plans(const MonoChain& chain, const Matrix& xstar) {
  if (xstar.cols() != chain.p)
    throw dimension_mismatch("query has " + std::to_string(xstar.cols()) + " columns, chain has " +
                             std::to_string(chain.p));
  std::vector<InterpPlan> plans;
  for (Index j = 0; j < chain.p; ++j) plans.push_back(fo_approx_init(chain.grid, xstar.col(j)));
  return plans;
}

inline Vector draw_location(const MonoChain& chain, const MonoDraw& d,
                            const std::vector<InterpPlan>& plans) {
  Vector loc = Vector::Constant(plans.front().query_count(), d.mu_hat);
  for (Index j = 0; j < chain.p; ++j)
    loc += d.nu[j] *
           (monoref(plans[static_cast<std::size_t>(j)], d.z_g.col(j), chain.variant).array() - 0.5)
               .matrix();
  return loc;
}
}  // namespace detail

inline StudentTDraws predict_samples(const MonoChain& chain, const Matrix& xstar) {
  if (chain.dof() < 2) throw dof_too_small("prediction needs n - p >= 2");
  if (chain.draws.empty()) throw degenerate_input("chain has no retained draws");
  const auto plans = detail::query_plans(chain, xstar);
  StudentTDraws out;
  out.dof = chain.dof();
  out.location.resize(xstar.rows(), static_cast<Index>(chain.draws.size()));
  out.scale2.resize(static_cast<Index>(chain.draws.size()));
  const double inflate = 1.0 + 1.0 / static_cast<double>(chain.n);
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    const auto col = static_cast<Index>(t);
    out.location.col(col) = detail::draw_location(chain, chain.draws[t], plans);
    out.scale2[col] = inflate * chain.draws[t].s2;
  }
  return out;
}

/// Simulates one response vector from the Student-t predictive of draw `t`.
inline Vector sample_predictive(const StudentTDraws& d, Index t, Rng& rng) {
  std::student_t_distribution<double> student(static_cast<double>(d.dof));
  Vector out(d.location.rows());
  const double scale = std::sqrt(d.scale2[t]);
  for (Index i = 0; i < out.size(); ++i)
    out[i] = d.location(i, t) + scale * student(rng.engine());
  return out;
}

/// Variance of a Student-t with `dof` degrees of freedom relative to its
/// squared scale: dof / (dof - 2).
inline double student_variance_factor(int dof) {
  if (dof <= 2) throw dof_too_small("Student-t variance needs more than 2 degrees of freedom");
  return static_cast<double>(dof) / static_cast<double>(dof - 2);
}

/// Law-of-total-variance aggregate over retained draws: covariance of the
/// per-draw locations plus mean s^2 times (n - p) / (n - p - 2).
inline PredictiveSummary predict_moments(const MonoChain& chain, const Matrix& xstar,
                                         bool full_cov = false) {
  const double factor = student_variance_factor(chain.dof());
  const StudentTDraws d = predict_samples(chain, xstar);
  PredictiveSummary out;
  out.dof = chain.dof();
  detail::between_draw_moments(d.location, full_cov, out.mean, out.var, out.cov);
  double mean_s2 = 0.0;
  for (const auto& draw : chain.draws) mean_s2 += draw.s2;
  mean_s2 /= static_cast<double>(chain.draws.size());
  out.var.array() += mean_s2 * factor;
  if (out.cov) out.cov->diagonal().array() += mean_s2 * factor;
  return out;
}

/// Posterior mean of nu_j * F_j at each query row, one column per input:
/// the coordinate-wise contributions used for sensitivity displays.
inline Matrix latent_contributions(const MonoChain& chain, const Matrix& xstar) {
  const auto plans = detail::query_plans(chain, xstar);
  Matrix out = Matrix::Zero(xstar.rows(), chain.p);
  for (const auto& d : chain.draws)
    for (Index j = 0; j < chain.p; ++j)
      out.col(j) += d.nu[j] * monoref(plans[static_cast<std::size_t>(j)], d.z_g.col(j), chain.variant);
  if (!chain.draws.empty()) out /= static_cast<double>(chain.draws.size());
  return out;
}

}  // namespace monowarp
