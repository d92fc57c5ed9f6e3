#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "ess.hpp"
#include "kernel.hpp"
#include "linalg.hpp"
#include "monogp.hpp"
#include "predictive.hpp"
#include "refinterp.hpp"
#include "rng.hpp"

namespace monowarp {

enum class ModelKind { mono_gp, mw_dgp, dgp, gp };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::mono_gp: return "mono-gp";
    case ModelKind::mw_dgp: return "mw-dgp";
    case ModelKind::dgp: return "dgp";
    case ModelKind::gp: return "gp";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "mono-gp") return ModelKind::mono_gp;
  if (s == "mw-dgp") return ModelKind::mw_dgp;
  if (s == "dgp") return ModelKind::dgp;
  if (s == "gp") return ModelKind::gp;
  throw config_error("unknown model '" + s + "' (expected mono-gp, mw-dgp, dgp or gp)");
}

/// Outer-layer hyperparameters: separable lengthscales and a nugget relative
/// to the (profiled) outer scale tau^2.
struct OuterHyper {
  Vector theta_y;
  double g = 0.01;
};

/// Gamma(shape, rate) priors for the two-layer models.
struct DgpPriors {
  double alpha_theta_w = 1.5;
  double beta_theta_w = 5.0;
  double alpha_theta_y = 1.5;
  double beta_theta_y = 5.0;
  double alpha_g = 1.5;
  double beta_g = 5.0;
  /// nugget proposals below this are rejected
  double g_min = 1.5e-8;

  static DgpPriors from(const PriorConfig& p) {
    DgpPriors out;
    out.alpha_theta_w = out.alpha_theta_y = p.alpha_theta;
    out.beta_theta_w = out.beta_theta_y = p.beta_theta;
    return out;
  }
  void validate() const {
    if (!(alpha_theta_w > 0 && beta_theta_w > 0 && alpha_theta_y > 0 && beta_theta_y > 0 &&
          alpha_g > 0 && beta_g > 0 && g_min > 0))
      throw config_error("deep GP prior parameters must be positive");
  }
};

inline SymMatrix outer_cov(const Matrix& w, const OuterHyper& hyp) {
  SymMatrix k = sq_exp_cov(w, KernelParams(hyp.theta_y));
  k.diagonal().array() += hyp.g;
  return k;
}

namespace detail {
inline double outer_log_marglik(const Vector& y, const CholFactor& chol) {
  const double n = static_cast<double>(y.size());
  const double quad = chol.tri().solve(y).squaredNorm();
  return -0.5 * chol.log_det() - 0.5 * n * std::log(quad / 2.0);
}
}  // namespace detail

/// Zero-mean GP log marginal with tau^2 integrated out under p(tau^2) ~ 1/tau^2,
/// constants dropped: -1/2 log|K| - (n/2) log(y^T K^{-1} y / 2).
inline double outer_log_marglik(const Vector& y, const Matrix& w, const OuterHyper& hyp) {
  if (w.rows() != y.size()) throw length_mismatch("outer_log_marglik: w and y row counts differ");
  return detail::outer_log_marglik(y, cholesky(outer_cov(w, hyp)));
}

struct DgpDraw {
  Vector theta_y;
  double g = 0.0;
  Vector theta_w;  // empty for the one-layer GP
  Matrix warp;     // mw-dgp: n_g x p latent z_g; dgp: n x p warped inputs; gp: empty
  Matrix carried;  // dgp with carried sites: m x p warped values at those sites
};

struct DgpChain {
  ModelKind model = ModelKind::gp;
  Matrix x;  // coded training inputs, n x p
  Vector y;
  double y_center = 0.0;
  RefGrid grid = RefGrid::uniform(50);
  MonoVariant variant = MonoVariant::exp;
  MCMCConfig mcmc;
  DgpPriors prior;
  Matrix carry_inputs;  // m x p, possibly empty
  std::vector<DgpDraw> draws;
  std::vector<AcceptanceCounts> theta_w_moves;
  std::vector<AcceptanceCounts> theta_y_moves;
  AcceptanceCounts g_moves;
  long ess_proposals = 0;
  long ess_updates = 0;
  std::vector<double> loglik_trace;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

struct DgpOptions {
  /// dgp only: test sites whose warping values ride along every ESS ellipse
  /// through the joint (train, test) prior draw.
  Matrix carry_inputs;
};

/// Shared Metropolis-within-Gibbs engine for mw-DGP, DGP and the one-layer GP.
class DgpSampler {
 public:
  DgpSampler(ModelKind model, const Matrix& x, const Vector& y, const DgpPriors& prior,
             const MCMCConfig& mcmc, const DgpOptions& opts = {})
      : model_(model), x_(x), prior_(prior), mcmc_(mcmc), grid_(RefGrid::uniform(mcmc.n_g)) {
    if (model == ModelKind::mono_gp) throw config_error("DgpSampler does not fit mono-gp");
    prior.validate();
    mcmc.validate();
    if (x.rows() != y.size()) throw length_mismatch("X and y row counts differ");
    if (x.cols() < 1) throw length_mismatch("X needs at least one column");
    if (!y.allFinite()) throw non_finite_response("response contains NaN or Inf");
    if (x.rows() < 2) throw too_few_observations("need at least 2 observations");
    if (model == ModelKind::mw_dgp && x.rows() < 3)
      throw too_few_observations("mw-dgp needs at least 3 observations");
    y_center_ = y.mean();
    y_ = y.array() - y_center_;
    const Index p = x.cols();
    hyp_.theta_y = Vector::Constant(p, 0.1);
    hyp_.g = 0.01;
    w_ = x;
    if (has_warp()) {
      theta_w_ = Vector::Constant(p, 0.1);
      theta_w_moves_.resize(static_cast<std::size_t>(p));
    }
    if (model == ModelKind::mw_dgp) {
      z_g_ = Matrix::Zero(grid_.size(), p);
      if (mcmc_.variant == MonoVariant::linear) z_g_.colwise() = grid_.nodes();
      for (Index j = 0; j < p; ++j) {
        plans_.push_back(fo_approx_init(grid_, x.col(j)));
        w_.col(j) = monoref(plans_.back(), z_g_.col(j), mcmc_.variant);
      }
    }
    if (model == ModelKind::dgp && opts.carry_inputs.size() > 0) {
      if (opts.carry_inputs.cols() != p)
        throw dimension_mismatch("carry_inputs column count differs from X");
      carry_x_ = opts.carry_inputs;
      carried_ = carry_x_;
    }
    for (Index j = 0; has_warp() && j < p; ++j) warp_factors_.push_back(warp_factor(j, theta_w_[j]));
    theta_y_moves_.resize(static_cast<std::size_t>(p));
    loglik_ = outer_log_marglik(y_, w_, hyp_);
  }

  bool has_warp() const { return model_ == ModelKind::mw_dgp || model_ == ModelKind::dgp; }
  const Matrix& w() const { return w_; }
  const OuterHyper& outer() const { return hyp_; }
  const Vector& theta_w() const { return theta_w_; }
  double loglik() const { return loglik_; }

  /// ESS on warping column j. mw-dgp: latent z_g^{(j)} under N(0, C_g(theta_w,j))
  /// mapped through monoref without shift or scale; dgp: the n training-site
  /// values under N(0, C_{theta_w,j}(X)).
  EssResult ess_warp_step(Index j, Rng& rng) {
    const auto col = static_cast<std::size_t>(j);
    Matrix w_try = w_;
    auto loglik = [&](const Vector& v) {
      w_try.col(j) = to_warp(j, v);
      return outer_log_marglik(y_, w_try, hyp_);
    };
    EssResult res;
    if (model_ == ModelKind::mw_dgp) {
      res = ess_update(Vector(z_g_.col(j)), loglik_, warp_factors_[col].chol, loglik, rng, mcmc_.ess);
      z_g_.col(j) = res.z;
    } else if (carry_x_.size() > 0) {
      auto [prior_train, prior_test] = warp_factors_[col].joint->draw(rng);
      res = ess_update(Vector(w_.col(j)), loglik_, prior_train, loglik, rng, mcmc_.ess);
      carried_.col(j) = ellipse_point(carried_.col(j), prior_test, res.angle);
    } else {
      res = ess_update(Vector(w_.col(j)), loglik_, warp_factors_[col].chol, loglik, rng, mcmc_.ess);
    }
    w_.col(j) = to_warp(j, res.z);
    loglik_ = res.loglik;
    ess_updates_ += 1;
    ess_proposals_ += res.shrinks + 1;
    return res;
  }

  bool mh_step_theta_w(Index j, Rng& rng) {
    const auto col = static_cast<std::size_t>(j);
    auto& moves = theta_w_moves_[col];
    double log_jac = 0.0;
    const double current = theta_w_[j];
    const double proposal = propose_scale(current, rng, log_jac);
    const double log_u = std::log(rng.uniform());
    moves.proposed += 1;
    WarpFactor fresh;
    try {
      fresh = warp_factor(j, proposal);
    } catch (const not_positive_definite&) {
      moves.factor_failures += 1;
      return false;
    }
    const Vector v = model_ == ModelKind::mw_dgp ? Vector(z_g_.col(j)) : Vector(w_.col(j));
    const double log_alpha =
        mvn_logpdf(v, fresh.chol) - mvn_logpdf(v, warp_factors_[col].chol) +
        log_gamma_density(proposal, prior_.alpha_theta_w, prior_.beta_theta_w) -
        log_gamma_density(current, prior_.alpha_theta_w, prior_.beta_theta_w) + log_jac;
    if (log_u < log_alpha) {
      theta_w_[j] = proposal;
      warp_factors_[col] = std::move(fresh);
      moves.accepted += 1;
      return true;
    }
    return false;
  }

  bool mh_step_theta_y(Index j, Rng& rng) {
    auto& moves = theta_y_moves_[static_cast<std::size_t>(j)];
    double log_jac = 0.0;
    const double current = hyp_.theta_y[j];
    const double proposal = propose_scale(current, rng, log_jac);
    OuterHyper h = hyp_;
    h.theta_y[j] = proposal;
    const double log_prior = log_gamma_density(proposal, prior_.alpha_theta_y, prior_.beta_theta_y) -
                             log_gamma_density(current, prior_.alpha_theta_y, prior_.beta_theta_y);
    return outer_move(h, log_prior + log_jac, moves, rng);
  }

  bool mh_step_g(Rng& rng) {
    double log_jac = 0.0;
    const double current = hyp_.g;
    const double proposal = propose_scale(current, rng, log_jac);
    if (proposal < prior_.g_min) {
      rng.uniform();  // keep the stream layout fixed
      g_moves_.proposed += 1;
      return false;
    }
    OuterHyper h = hyp_;
    h.g = proposal;
    const double log_prior = log_gamma_density(proposal, prior_.alpha_g, prior_.beta_g) -
                             log_gamma_density(current, prior_.alpha_g, prior_.beta_g);
    return outer_move(h, log_prior + log_jac, g_moves_, rng);
  }

  /// Warping columns (ascending), then theta_w, theta_y and finally g.
  void sweep(Rng& rng) {
    const Index p = x_.cols();
    if (has_warp()) {
      for (Index j = 0; j < p; ++j) ess_warp_step(j, rng);
      for (Index j = 0; j < p; ++j) mh_step_theta_w(j, rng);
    }
    for (Index j = 0; j < p; ++j) mh_step_theta_y(j, rng);
    mh_step_g(rng);
  }

  DgpDraw snapshot() const {
    DgpDraw d;
    d.theta_y = hyp_.theta_y;
    d.g = hyp_.g;
    d.theta_w = theta_w_;
    if (model_ == ModelKind::mw_dgp) d.warp = z_g_;
    if (model_ == ModelKind::dgp) d.warp = w_;
    d.carried = carried_;
    return d;
  }

  DgpChain make_chain() const {
    DgpChain c;
    c.model = model_;
    c.x = x_;
    c.y = y_.array() + y_center_;
    c.y_center = y_center_;
    c.grid = grid_;
    c.variant = mcmc_.variant;
    c.mcmc = mcmc_;
    c.prior = prior_;
    c.carry_inputs = carry_x_;
    c.theta_w_moves = theta_w_moves_;
    c.theta_y_moves = theta_y_moves_;
    c.g_moves = g_moves_;
    c.ess_proposals = ess_proposals_;
    c.ess_updates = ess_updates_;
    return c;
  }

 private:
  struct WarpFactor {
    CholFactor chol;
    std::optional<JointPrior> joint;
  };

  WarpFactor warp_factor(Index j, double theta) const {
    const auto kp = KernelParams::isotropic(theta);
    if (model_ == ModelKind::mw_dgp)
      return {cholesky(sq_exp_cov(grid_.as_design(), kp), model_jitter), std::nullopt};
    WarpFactor f{cholesky(sq_exp_cov(x_, kp), model_jitter), std::nullopt};
    if (carry_x_.size() > 0)
      f.joint.emplace(sq_exp_cov(x_, kp), sq_exp_cross(x_, carry_x_, kp), sq_exp_cov(carry_x_, kp),
                      model_jitter);
    (void)j;
    return f;
  }

  Vector to_warp(Index j, const Vector& v) const {
    if (model_ == ModelKind::mw_dgp)
      return monoref(plans_[static_cast<std::size_t>(j)], v, mcmc_.variant);
    return v;
  }

  bool outer_move(const OuterHyper& h, double log_ratio_rest, AcceptanceCounts& moves, Rng& rng) {
    const double log_u = std::log(rng.uniform());
    moves.proposed += 1;
    CholFactor chol;
    try {
      chol = cholesky(outer_cov(w_, h));
    } catch (const not_positive_definite&) {
      moves.factor_failures += 1;
      return false;
    }
    const double ll = detail::outer_log_marglik(y_, chol);
    if (log_u < ll - loglik_ + log_ratio_rest) {
      hyp_ = h;
      loglik_ = ll;
      moves.accepted += 1;
      return true;
    }
    return false;
  }

  ModelKind model_;
  Matrix x_;
  Vector y_;
  double y_center_ = 0.0;
  DgpPriors prior_;
  MCMCConfig mcmc_;
  RefGrid grid_;
  std::vector<InterpPlan> plans_;
  Matrix z_g_;
  Matrix w_;
  Vector theta_w_;
  OuterHyper hyp_;
  double loglik_ = 0.0;
  std::vector<WarpFactor> warp_factors_;
  Matrix carry_x_;
  Matrix carried_;
  std::vector<AcceptanceCounts> theta_w_moves_;
  std::vector<AcceptanceCounts> theta_y_moves_;
  AcceptanceCounts g_moves_;
  long ess_proposals_ = 0;
  long ess_updates_ = 0;
};

/// Deep-GP defaults: 10000 iterations, 1000 burn-in, thin by 10.
inline MCMCConfig dgp_default_mcmc() {
  MCMCConfig m;
  m.total = 10000;
  m.burn = 1000;
  m.thin = 10;
  return m;
}

inline DgpChain fit_two_layer(ModelKind model, const Matrix& x, const Vector& y,
                              const DgpPriors& prior, const MCMCConfig& mcmc,
                              const DgpOptions& opts = {}) {
  DgpSampler sampler(model, x, y, prior, mcmc, opts);
  Rng rng(mcmc.seed);
  std::vector<DgpDraw> draws;
  draws.reserve(static_cast<std::size_t>(mcmc.retained_count()));
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(mcmc.total));
  for (int t = 1; t <= mcmc.total; ++t) {
    sampler.sweep(rng);
    trace.push_back(sampler.loglik());
    if (mcmc.keeps(t)) draws.push_back(sampler.snapshot());
  }
  DgpChain chain = sampler.make_chain();
  chain.draws = std::move(draws);
  chain.loglik_trace = std::move(trace);
  return chain;
}

inline DgpChain fit_mwdgp(const Matrix& x, const Vector& y, const DgpPriors& prior = {},
                          const MCMCConfig& mcmc = dgp_default_mcmc()) {
  return fit_two_layer(ModelKind::mw_dgp, x, y, prior, mcmc);
}

inline DgpChain fit_dgp(const Matrix& x, const Vector& y, const DgpPriors& prior = {},
                        const MCMCConfig& mcmc = dgp_default_mcmc(), const DgpOptions& opts = {}) {
  return fit_two_layer(ModelKind::dgp, x, y, prior, mcmc, opts);
}

inline DgpChain fit_gp(const Matrix& x, const Vector& y, const DgpPriors& prior = {},
                       const MCMCConfig& mcmc = dgp_default_mcmc()) {
  return fit_two_layer(ModelKind::gp, x, y, prior, mcmc);
}

/// Warped training and query inputs implied by one retained draw.
struct WarpedInputs {
  Matrix train;
  Matrix query;
};

inline WarpedInputs warp_inputs(const DgpChain& chain, const DgpDraw& d, const Matrix& xstar) {
  WarpedInputs out;
  switch (chain.model) {
    case ModelKind::gp:
      out.train = chain.x;
      out.query = xstar;
      break;
    case ModelKind::mw_dgp:
      out.train.resize(chain.n(), chain.p());
      out.query.resize(xstar.rows(), chain.p());
      for (Index j = 0; j < chain.p(); ++j) {
        out.train.col(j) = monoref(chain.x.col(j), chain.grid, d.warp.col(j), chain.variant);
        out.query.col(j) = monoref(xstar.col(j), chain.grid, d.warp.col(j), chain.variant);
      }
      break;
    case ModelKind::dgp: {
      out.train = d.warp;
      if (chain.carry_inputs.size() > 0 && chain.carry_inputs.rows() == xstar.rows() &&
          chain.carry_inputs == xstar) {
        out.query = d.carried;
        break;
      }
      // kriging mean of each warping column at the query sites
      out.query.resize(xstar.rows(), chain.p());
      for (Index j = 0; j < chain.p(); ++j) {
        const auto kp = KernelParams::isotropic(d.theta_w[j]);
        const CholFactor chol = cholesky(sq_exp_cov(chain.x, kp), model_jitter);
        out.query.col(j) = sq_exp_cross(xstar, chain.x, kp) * chol_solve(chol, d.warp.col(j));
      }
      break;
    }
    case ModelKind::mono_gp:
      throw config_error("mono-gp chains are not deep GP chains");
  }
  return out;
}

/// Per-draw plug-in kriging quantities: tau^2 estimated as y^T K^{-1} y / n,
/// nugget added to the predictive variance.
struct TwoLayerDraws {
  Matrix means;  // n' x T, on the original response scale
  Vector within;
  SymMatrix within_cov;  // empty unless requested
};

inline TwoLayerDraws two_layer_draws(const DgpChain& chain, const Matrix& xstar,
                                     bool full_cov = false) {
  if (chain.draws.empty()) throw degenerate_input("chain has no retained draws");
  if (xstar.cols() != chain.p())
    throw dimension_mismatch("query has " + std::to_string(xstar.cols()) + " columns, chain has " +
                             std::to_string(chain.p()));
  const Index m = xstar.rows();
  const Index draws = static_cast<Index>(chain.draws.size());
  const Vector yc = chain.y.array() - chain.y_center;
  const double n = static_cast<double>(chain.n());
  TwoLayerDraws out{Matrix(m, draws), Vector::Zero(m), SymMatrix()};
  if (full_cov) out.within_cov = SymMatrix::Zero(m, m);
  for (Index t = 0; t < draws; ++t) {
    const DgpDraw& d = chain.draws[static_cast<std::size_t>(t)];
    const WarpedInputs wi = warp_inputs(chain, d, xstar);
    const OuterHyper hyp{d.theta_y, d.g};
    const CholFactor chol = cholesky(outer_cov(wi.train, hyp));
    const Vector alpha = chol_solve(chol, yc);
    const double tau2 = yc.dot(alpha) / n;
    const Matrix cross = sq_exp_cross(wi.train, wi.query, KernelParams(d.theta_y));
    out.means.col(t) = (cross.transpose() * alpha).array() + chain.y_center;
    const Matrix v = chol.tri().solve(cross);
    const Vector reduction = v.colwise().squaredNorm().transpose();
    out.within.array() += tau2 * ((1.0 - reduction.array()).max(0.0) + d.g);
    if (full_cov) out.within_cov += tau2 * (outer_cov(wi.query, hyp) - v.transpose() * v);
  }
  out.within /= static_cast<double>(draws);
  if (full_cov) out.within_cov /= static_cast<double>(draws);
  return out;
}

/// Law-of-total-variance aggregate of the per-draw kriging predictions.
inline PredictiveSummary predict_two_layer(const DgpChain& chain, const Matrix& xstar,
                                           bool full_cov = false) {
  const TwoLayerDraws d = two_layer_draws(chain, xstar, full_cov);
  PredictiveSummary out;
  detail::between_draw_moments(d.means, full_cov, out.mean, out.var, out.cov);
  out.var += d.within;
  if (out.cov) {
    *out.cov += d.within_cov;
    *out.cov = 0.5 * (*out.cov + out.cov->transpose()).eval();
    out.cov->diagonal() = out.var;
  }
  return out;
}

inline PredictiveSummary predict_mwdgp(const DgpChain& chain, const Matrix& xstar,
                                       bool full_cov = false) {
  return predict_two_layer(chain, xstar, full_cov);
}

}  // namespace monowarp
