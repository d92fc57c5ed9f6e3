#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "dgp.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "monogp.hpp"
#include "predictive.hpp"
#include "rng.hpp"

namespace monowarp {

// ---------------------------------------------------------------------------
// Synthetic test functions. Each is evaluated on [0, 1]^p after an affine
// decode to its native box.

struct TestFunction {
  std::string name;
  Index dim = 1;
  double noise_sd = 0.0;
  Vector lower;  // native box
  Vector upper;
  std::function<double(const Vector&)> native;

  Vector decode(const Eigen::Ref<const Vector>& coded) const {
    return lower.array() + coded.array() * (upper - lower).array();
  }
  double operator()(const Eigen::Ref<const Vector>& coded) const { return native(decode(coded)); }
};

namespace detail {
inline double inv_logit(double a) { return 1.0 / (1.0 + std::exp(-a)); }
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}
inline TestFunction make_fn(std::string name, Index dim, double noise_sd, double lo, double hi,
                            std::function<double(const Vector&)> f) {
  return {std::move(name), dim, noise_sd, Vector::Constant(dim, lo), Vector::Constant(dim, hi),
          std::move(f)};
}
}  // namespace detail

inline std::vector<std::string> test_function_names() {
  return {"logistic1d", "logistic2d", "lopez5d", "arctan10", "cross-in-tray", "michalewicz",
          "plateau"};
}

/// `dim` = 0 selects the function's customary dimension; only arctan10,
/// michalewicz and plateau accept other dimensions.
inline TestFunction make_test_function(const std::string& name, Index dim = 0) {
  using detail::inv_logit;
  using detail::make_fn;
  auto fixed = [&](Index d) {
    if (dim != 0 && dim != d)
      throw unknown_function(name + " is only defined for dimension " + std::to_string(d));
    return d;
  };
  if (name == "logistic1d")
    return make_fn(name, fixed(1), 1.0, 0.0, 1.0,
                   [](const Vector& x) { return 10.0 * inv_logit(10.0 * x[0] - 5.0); });
  if (name == "logistic2d")
    return make_fn(name, fixed(2), std::sqrt(0.1), 0.0, 1.0, [](const Vector& x) {
      return 10.0 * inv_logit(10.0 * x[0] - 7.0) + 5.0 * inv_logit(10.0 * x[1] - 3.0);
    });
  if (name == "lopez5d")
    return make_fn(name, fixed(5), 0.1, 0.0, 1.0, [](const Vector& x) {
      return std::atan(5.0 * x[0]) + std::atan(2.0 * x[1]) + x[2] + 2.0 * x[3] * x[3] +
             2.0 / (1.0 + std::exp(-10.0 * (x[4] - 0.5)));
    });
  if (name == "arctan10") {
    const Index d = dim == 0 ? 10 : dim;
    return make_fn(name, d, 0.1, 0.0, 1.0, [d](const Vector& x) {
      const double c = 5.0 * (1.0 - 1.0 / static_cast<double>(d + 1));
      double s = 0.0;
      for (Index j = 0; j < d; ++j) s += std::atan(c * x[j]);
      return s;
    });
  }
  if (name == "cross-in-tray")
    return make_fn(name, fixed(2), 0.0, -2.0, 2.0, [](const Vector& x) {
      const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
      const double inner =
          std::abs(std::sin(x[0]) * std::sin(x[1]) * std::exp(std::abs(100.0 - r / std::numbers::pi)));
      return -0.0001 * std::pow(inner + 1.0, 0.1);
    });
  if (name == "michalewicz") {
    const Index d = dim == 0 ? 3 : dim;
    return make_fn(name, d, 0.0, 0.0, std::numbers::pi, [d](const Vector& x) {
      constexpr int m = 10;
      double s = 0.0;
      for (Index i = 0; i < d; ++i) {
        const double inner = std::sin(static_cast<double>(i + 1) * x[i] * x[i] / std::numbers::pi);
        s += std::sin(x[i]) * std::pow(inner, 2 * m);
      }
      return -s;
    });
  }
  if (name == "plateau") {
    const Index d = dim == 0 ? 2 : dim;
    return make_fn(name, d, 0.0, -2.0, 2.0, [](const Vector& x) {
      return 2.0 * detail::std_normal_cdf(std::numbers::sqrt2 * (-4.0 - 3.0 * x.sum())) - 1.0;
    });
  }
  throw unknown_function("unknown test function '" + name + "'");
}

struct Evaluation {
  Vector noisy;
  Vector truth;
};

/// Noise-free truth plus iid N(0, noise_sd^2) at each coded row of x.
inline Evaluation eval_function(const TestFunction& f, const Matrix& x, Rng& rng,
                                std::optional<double> noise_sd = std::nullopt) {
  if (x.cols() != f.dim)
    throw dimension_mismatch(f.name + " expects " + std::to_string(f.dim) + " inputs");
  const double sd = noise_sd.value_or(f.noise_sd);
  Evaluation out{Vector(x.rows()), Vector(x.rows())};
  for (Index i = 0; i < x.rows(); ++i) {
    out.truth[i] = f(x.row(i).transpose());
    out.noisy[i] = out.truth[i] + (sd > 0.0 ? sd * rng.normal() : 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Designs

/// Latin hypercube: every column has exactly one point in each stratum
/// [i/n, (i+1)/n). Per column: a random permutation, then within-cell uniforms.
inline Matrix lhs(Index n, Index p, Rng& rng) {
  if (n < 1 || p < 1) throw length_mismatch("lhs needs n >= 1 and p >= 1");
  Matrix x(n, p);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index j = 0; j < p; ++j) {
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
      const auto k = static_cast<Index>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(k, i))]);
    }
    for (Index i = 0; i < n; ++i) {
      double v = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                 static_cast<double>(n);
      x(i, j) = std::min(v, std::nextafter(1.0, 0.0));
    }
  }
  return x;
}

/// Full factorial grid with `side` evenly spaced levels on [0, 1] per input;
/// the first column varies fastest.
inline Matrix grid_design(Index side, Index p) {
  if (side < 2 || p < 1) throw length_mismatch("grid_design needs side >= 2 and p >= 1");
  const Vector levels = Vector::LinSpaced(side, 0.0, 1.0);
  Index rows = 1;
  for (Index j = 0; j < p; ++j) rows *= side;
  Matrix x(rows, p);
  for (Index r = 0; r < rows; ++r) {
    Index rem = r;
    for (Index j = 0; j < p; ++j) {
      x(r, j) = levels[rem % side];
      rem /= side;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Metrics

inline double rmse(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size() || pred.size() < 1)
    throw length_mismatch("rmse: vectors must have equal nonzero length");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

/// Average closed-form CRPS of N(mean_i, var_i) against observations y_i.
inline double crps_gaussian(const Vector& mean, const Vector& var, const Vector& y) {
  if (mean.size() != var.size() || mean.size() != y.size() || y.size() < 1)
    throw length_mismatch("crps_gaussian: vectors must have equal nonzero length");
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    if (!(var[i] > 0.0)) throw non_positive_variance("crps_gaussian: variance must be positive");
    const double sd = std::sqrt(var[i]);
    const double z = (y[i] - mean[i]) / sd;
    total += sd * (z * (2.0 * detail::std_normal_cdf(z) - 1.0) + 2.0 * detail::std_normal_pdf(z) -
                   1.0 / std::sqrt(std::numbers::pi));
  }
  return total / static_cast<double>(y.size());
}

/// Central interval of the moment-matched predictive: Student-t with the
/// summary's dof (scale chosen to reproduce `var`), or Gaussian when dof = 0.
inline std::pair<Vector, Vector> predictive_interval(const PredictiveSummary& s, double coverage) {
  const double upper_p = 0.5 + 0.5 * coverage;
  Vector half(s.var.size());
  if (s.dof > 2) {
    const boost::math::students_t_distribution<double> t(static_cast<double>(s.dof));
    const double q = boost::math::quantile(t, upper_p);
    const double shrink = static_cast<double>(s.dof - 2) / static_cast<double>(s.dof);
    half = q * (s.var.array() * shrink).sqrt();
  } else {
    const double q = boost::math::quantile(boost::math::normal_distribution<double>(), upper_p);
    half = q * s.var.array().sqrt();
  }
  return {s.mean - half, s.mean + half};
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentSpec {
  std::string name = "experiment";
  std::string function = "logistic1d";
  Index dim = 0;
  std::vector<ModelKind> methods;
  Index n = 20;
  Index n_test = 100;
  std::string test_design = "lhs";  // lhs | grid
  int reps = 5;
  std::uint64_t seed = 1;
  std::optional<double> noise_sd;
  MCMCConfig mono_mcmc{};
  MCMCConfig dgp_mcmc = dgp_default_mcmc();
  PriorConfig prior{};
  DgpPriors dgp_prior{};
  bool timings = true;
  bool plot_data = false;
  bool sensitivity = false;
  int threads = 1;

  void validate() const {
    make_test_function(function, dim);
    if (n < 2) throw spec_error("n must be >= 2");
    if (n_test < 1) throw spec_error("n_test must be >= 1");
    if (reps < 0) throw spec_error("reps must be >= 0");
    if (test_design != "lhs" && test_design != "grid")
      throw spec_error("test_design must be 'lhs' or 'grid'");
    if (threads < 1) throw spec_error("threads must be >= 1");
    mono_mcmc.validate();
    dgp_mcmc.validate();
    prior.validate();
    dgp_prior.validate();
  }
};

struct MetricsRow {
  std::string method;
  int rep = 0;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double crps = std::numeric_limits<double>::quiet_NaN();
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  std::string error;  // empty on success
  bool ok() const { return error.empty(); }
};

/// Per repetition and method: test inputs, truth, predictive mean and the
/// central 90% interval.
struct PlotData {
  std::string method;
  int rep = 0;
  Matrix x;
  Vector truth;
  Vector mean;
  Vector lower;
  Vector upper;
};

/// mono-GP coordinate-wise posterior means of nu_j F_j on a 1-d grid.
struct SensitivityData {
  int rep = 0;
  Vector x;
  Matrix contribution;  // rows: grid points, cols: inputs
};

/// Warping samples kept for inspection: one matrix per retained draw holding
/// warped values at the training inputs.
struct RepOutput {
  std::vector<MetricsRow> rows;
  std::vector<PlotData> plots;
  std::optional<SensitivityData> sensitivity;
  std::vector<Matrix> warp_samples;  // mw-dgp only
  Matrix train_x;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<PlotData> plots;
  std::vector<SensitivityData> sensitivity;
  std::vector<RepOutput> reps;
};

/// Seed splitting: repetition r uses mix_seed(seed + r); method m within it
/// uses mix_seed(rep_seed + 1 + m) where m is the model's enum value.
inline std::uint64_t rep_seed(std::uint64_t base, int rep) {
  return mix_seed(base + static_cast<std::uint64_t>(rep));
}
inline std::uint64_t method_seed(std::uint64_t rep_s, ModelKind m) {
  return mix_seed(rep_s + 1 + static_cast<std::uint64_t>(m));
}

struct FittedPrediction {
  PredictiveSummary summary;
  std::optional<Matrix> sensitivity;
  std::vector<Matrix> warp_samples;
};

inline RepOutput run_repetition(const ExperimentSpec& spec, int rep) {
  using clock = std::chrono::steady_clock;
  const TestFunction f = make_test_function(spec.function, spec.dim);
  const std::uint64_t rs = rep_seed(spec.seed, rep);
  Rng data_rng(rs);
  RepOutput out;
  const Matrix x = lhs(spec.n, f.dim, data_rng);
  const Evaluation train = eval_function(f, x, data_rng, spec.noise_sd);
  Matrix xt;
  if (spec.test_design == "grid") {
    const auto side = static_cast<Index>(
        std::llround(std::pow(static_cast<double>(spec.n_test), 1.0 / static_cast<double>(f.dim))));
    xt = grid_design(std::max<Index>(side, 2), f.dim);
  } else {
    xt = lhs(spec.n_test, f.dim, data_rng);
  }
  const Evaluation test = eval_function(f, xt, data_rng, spec.noise_sd);
  out.train_x = x;

  for (ModelKind m : spec.methods) {
    MetricsRow row;
    row.method = to_string(m);
    row.rep = rep;
    try {
      const auto t0 = clock::now();
      PredictiveSummary summary;
      double fit_s = 0.0;
      if (m == ModelKind::mono_gp) {
        MCMCConfig mc = spec.mono_mcmc;
        mc.seed = method_seed(rs, m);
        const MonoChain chain = fit_monogp(x, train.noisy, spec.prior, mc);
        fit_s = std::chrono::duration<double>(clock::now() - t0).count();
        summary = predict_moments(chain, xt, false);
        if (spec.sensitivity) {
          SensitivityData sd;
          sd.rep = rep;
          sd.x = Vector::LinSpaced(101, 0.0, 1.0);
          sd.contribution = latent_contributions(chain, Matrix(sd.x.replicate(1, f.dim)));
          out.sensitivity = std::move(sd);
        }
      } else {
        MCMCConfig mc = spec.dgp_mcmc;
        mc.seed = method_seed(rs, m);
        const DgpChain chain = fit_two_layer(m, x, train.noisy, spec.dgp_prior, mc);
        fit_s = std::chrono::duration<double>(clock::now() - t0).count();
        summary = predict_two_layer(chain, xt, false);
        if (m == ModelKind::mw_dgp)
          for (const auto& d : chain.draws) out.warp_samples.push_back(warp_inputs(chain, d, x).train);
      }
      const double total_s = std::chrono::duration<double>(clock::now() - t0).count();
      row.rmse = rmse(summary.mean, test.truth);
      row.crps = crps_gaussian(summary.mean, summary.var, test.noisy);
      if (spec.timings) {
        row.fit_seconds = fit_s;
        row.predict_seconds = total_s - fit_s;
      }
      if (spec.plot_data) {
        auto [lo, hi] = predictive_interval(summary, 0.90);
        out.plots.push_back({row.method, rep, xt, test.truth, summary.mean, lo, hi});
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

/// Runs every repetition (in parallel when spec.threads > 1); output order is
/// by repetition, then by the spec's method order, regardless of scheduling.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.reps.resize(static_cast<std::size_t>(spec.reps));
  if (spec.methods.empty()) return result;
  const int workers = std::min(spec.threads, std::max(spec.reps, 1));
  if (workers <= 1) {
    for (int r = 0; r < spec.reps; ++r) result.reps[static_cast<std::size_t>(r)] = run_repetition(spec, r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int r = w; r < spec.reps; r += workers)
          result.reps[static_cast<std::size_t>(r)] = run_repetition(spec, r);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& rep : result.reps) {
    result.rows.insert(result.rows.end(), rep.rows.begin(), rep.rows.end());
    result.plots.insert(result.plots.end(), rep.plots.begin(), rep.plots.end());
    if (rep.sensitivity) result.sensitivity.push_back(*rep.sensitivity);
  }
  return result;
}

/// Median of a metric over the successful rows of one method.
inline double median_metric(const std::vector<MetricsRow>& rows, const std::string& method,
                            double MetricsRow::*field) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.method == method && r.ok()) v.push_back(r.*field);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace monowarp
