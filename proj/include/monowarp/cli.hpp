#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bench.hpp"
#include "dgp.hpp"
#include "io.hpp"
#include "monogp.hpp"

namespace monowarp::cli {

namespace fs = std::filesystem;
using io::json;

/// Above this many query points a full predictive covariance needs --force.
constexpr Index full_cov_limit = 1000;

inline fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  io::RunConfig config;
  std::string chain_name = "chain.json";
  std::string report_name = "report.json";
};

struct FitResult {
  fs::path chain_path;
  fs::path report_path;
  io::SavedChain chain;
};

namespace detail {

inline json trace_summary(std::vector<double> v) {
  if (v.empty()) return json::object();
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double h = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {{"mean", mean},
          {"sd", v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0},
          {"q05", q(0.05)},
          {"median", q(0.5)},
          {"q95", q(0.95)}};
}

inline json rate_json(const AcceptanceCounts& a) {
  return {{"proposed", a.proposed}, {"accepted", a.accepted}, {"rate", a.rate()},
          {"factor_failures", a.factor_failures}};
}

inline json fit_report(const io::SavedChain& s) {
  json r;
  r["model"] = to_string(s.model());
  json traces = json::object();
  json rates = json::object();
  if (s.mono) {
    const MonoChain& c = *s.mono;
    r["n"] = c.n;
    r["p"] = c.p;
    r["retained"] = c.draws.size();
    for (Index j = 0; j < c.p; ++j) {
      std::vector<double> nu, theta;
      for (const auto& d : c.draws) {
        nu.push_back(d.nu[j]);
        theta.push_back(d.theta[j]);
      }
      const std::string k = std::to_string(j + 1);
      traces["nu_" + k] = trace_summary(nu);
      traces["theta_" + k] = trace_summary(theta);
      rates["nu_" + k] = rate_json(c.nu_moves[static_cast<std::size_t>(j)]);
      rates["theta_" + k] = rate_json(c.theta_moves[static_cast<std::size_t>(j)]);
    }
    std::vector<double> mu, s2;
    for (const auto& d : c.draws) {
      mu.push_back(d.mu_hat);
      s2.push_back(d.s2);
    }
    traces["mu_hat"] = trace_summary(mu);
    traces["s2"] = trace_summary(s2);
  } else {
    const DgpChain& c = *s.deep;
    r["n"] = c.n();
    r["p"] = c.p();
    r["retained"] = c.draws.size();
    for (Index j = 0; j < c.p(); ++j) {
      const std::string k = std::to_string(j + 1);
      std::vector<double> ty, tw;
      for (const auto& d : c.draws) {
        ty.push_back(d.theta_y[j]);
        if (d.theta_w.size() > 0) tw.push_back(d.theta_w[j]);
      }
      traces["theta_y_" + k] = trace_summary(ty);
      rates["theta_y_" + k] = rate_json(c.theta_y_moves[static_cast<std::size_t>(j)]);
      if (!tw.empty()) {
        traces["theta_w_" + k] = trace_summary(tw);
        rates["theta_w_" + k] = rate_json(c.theta_w_moves[static_cast<std::size_t>(j)]);
      }
    }
    std::vector<double> g;
    for (const auto& d : c.draws) g.push_back(d.g);
    traces["g"] = trace_summary(g);
    rates["g"] = rate_json(c.g_moves);
  }
  const long ess_p = s.mono ? s.mono->ess_proposals : s.deep->ess_proposals;
  const long ess_u = s.mono ? s.mono->ess_updates : s.deep->ess_updates;
  r["ess"] = {{"updates", ess_u},
              {"proposals", ess_p},
              {"proposals_per_update", ess_u > 0 ? static_cast<double>(ess_p) / ess_u : 0.0}};
  r["acceptance"] = std::move(rates);
  r["traces"] = std::move(traces);
  return r;
}

}  // namespace detail

/// Reads the training CSV (x1..xp, y), codes inputs to [0, 1], fits the
/// configured model and writes the chain file and a JSON fit report.
inline FitResult cmd_fit(const FitOptions& opt) {
  const io::RunConfig& cfg = opt.config;
  if (cfg.train.empty()) throw config_error("key 'train': no training file given");
  const io::Table t = io::read_csv(fs::path(cfg.train));
  if (t.data.cols() < 2) throw parse_error(cfg.train + ": need at least one input and a response");
  const Index p = t.data.cols() - 1;
  const Matrix x_raw = t.data.leftCols(p);
  const Vector y = t.data.col(p);

  io::SavedChain saved;
  saved.coder = io::InputCoder::fit(x_raw);
  const Matrix x = saved.coder.code(x_raw);
  if (cfg.model == ModelKind::mono_gp)
    saved.mono = fit_monogp(x, y, cfg.prior, cfg.mcmc);
  else
    saved.deep = fit_two_layer(cfg.model, x, y, cfg.dgp_prior, cfg.mcmc);

  const fs::path dir = ensure_dir(cfg.output_dir);
  FitResult out{dir / opt.chain_name, dir / opt.report_name, std::move(saved)};
  io::save_chain(out.chain_path, out.chain);
  std::ofstream rep(out.report_path);
  if (!rep) throw error("cannot write " + out.report_path.string());
  rep << detail::fit_report(out.chain).dump(2) << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  std::string chain;
  std::string test;  // CSV path; its first p columns are used
  std::string grid;  // "a:b:k", applied to every input (tensor product)
  bool full_cov = false;
  bool force = false;
  bool samples = false;
  std::string output_dir = ".";
  std::string output_name = "predictions.csv";
};

struct PredictResult {
  Matrix x;  // native units
  PredictiveSummary summary;
  fs::path predictions_path;
};

/// Parses "a:b:k" into k evenly spaced values from a to b.
inline Vector parse_grid_spec(const std::string& s) {
  const auto parts = io::split(s, ':');
  double a = 0.0, b = 0.0, k = 0.0;
  if (parts.size() != 3 || !io::parse_double(parts[0], a) || !io::parse_double(parts[1], b) ||
      !io::parse_double(parts[2], k) || k < 1 || k != std::floor(k))
    throw config_error("grid spec must look like a:b:k with integer k >= 1, got '" + s + "'");
  if (k == 1) return Vector::Constant(1, a);
  return Vector::LinSpaced(static_cast<Index>(k), a, b);
}

inline Matrix tensor_grid(const Vector& levels, Index p) {
  Index rows = 1;
  for (Index j = 0; j < p; ++j) rows *= levels.size();
  Matrix x(rows, p);
  for (Index r = 0; r < rows; ++r) {
    Index rem = r;
    for (Index j = 0; j < p; ++j) {
      x(r, j) = levels[rem % levels.size()];
      rem /= levels.size();
    }
  }
  return x;
}

/// Writes x1..xp, mean, var, lower95, upper95; optional covariance.csv and
/// samples.csv (per-draw predictive locations, one column per draw).
inline PredictResult cmd_predict(const PredictOptions& opt) {
  const io::SavedChain s = io::load_chain(opt.chain);
  const Index p = s.dim();
  Matrix x;
  if (!opt.grid.empty() && !opt.test.empty())
    throw config_error("give either a test file or a grid spec, not both");
  if (!opt.grid.empty()) {
    x = tensor_grid(parse_grid_spec(opt.grid), p);
  } else if (!opt.test.empty()) {
    const io::Table t = io::read_csv(fs::path(opt.test));
    if (t.data.cols() < p)
      throw dimension_mismatch(opt.test + ": chain has " + std::to_string(p) +
                               " inputs, file has " + std::to_string(t.data.cols()) + " columns");
    x = t.data.leftCols(p);
  } else {
    throw config_error("no test file or grid spec given");
  }
  if (opt.full_cov && x.rows() > full_cov_limit && !opt.force)
    throw config_error("--full-cov with " + std::to_string(x.rows()) +
                       " query points exceeds the limit of " + std::to_string(full_cov_limit) +
                       "; pass --force to compute it anyway");

  const Matrix xc = s.coder.code(x);
  PredictResult out;
  out.x = x;
  Matrix draws;
  if (s.mono) {
    out.summary = predict_moments(*s.mono, xc, opt.full_cov);
    if (opt.samples) draws = predict_samples(*s.mono, xc).location;
  } else {
    out.summary = predict_two_layer(*s.deep, xc, opt.full_cov);
    if (opt.samples) draws = two_layer_draws(*s.deep, xc).means;
  }

  const fs::path dir = ensure_dir(opt.output_dir);
  const auto [lo, hi] = predictive_interval(out.summary, 0.95);
  Matrix table(x.rows(), p + 4);
  table << x, out.summary.mean, out.summary.var, lo, hi;
  auto header = io::x_header(p);
  for (const char* h : {"mean", "var", "lower95", "upper95"}) header.emplace_back(h);
  out.predictions_path = dir / opt.output_name;
  io::write_csv(out.predictions_path, header, table);
  if (out.summary.cov) {
    std::vector<std::string> ch;
    for (Index i = 1; i <= x.rows(); ++i) ch.push_back("c" + std::to_string(i));
    io::write_csv(dir / "covariance.csv", ch, *out.summary.cov);
  }
  if (opt.samples) {
    std::vector<std::string> sh;
    for (Index t = 1; t <= draws.cols(); ++t) sh.push_back("draw" + std::to_string(t));
    io::write_csv(dir / "samples.csv", sh, draws);
  }
  return out;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::string spec;  // built-in name or path
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string output_dir = ".";
};

inline std::string metrics_header() { return "method,rep,rmse,crps,fit_seconds,predict_seconds"; }

inline void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << metrics_header() << '\n';
  for (const auto& r : rows)
    out << r.method << ',' << r.rep << ',' << io::fmt(r.rmse) << ',' << io::fmt(r.crps) << ','
        << io::fmt(r.fit_seconds) << ',' << io::fmt(r.predict_seconds) << '\n';
}

/// Runs the experiment and writes metrics.csv, errors.csv (failed rows),
/// plot_<method>_rep<r>.csv and sensitivity_rep<r>.csv when enabled.
inline ExperimentResult cmd_bench(const BenchOptions& opt) {
  ExperimentSpec spec = io::load_experiment_spec(opt.spec);
  if (opt.seed) spec.seed = *opt.seed;
  spec.threads = std::max(1, opt.threads);
  spec.validate();
  const ExperimentResult res = run_experiment(spec);

  const fs::path dir = ensure_dir(opt.output_dir);
  {
    std::ofstream out(dir / "metrics.csv");
    if (!out) throw error("cannot write " + (dir / "metrics.csv").string());
    write_metrics(out, res.rows);
  }
  std::vector<const MetricsRow*> failed;
  for (const auto& r : res.rows)
    if (!r.ok()) failed.push_back(&r);
  if (!failed.empty()) {
    std::ofstream out(dir / "errors.csv");
    out << "method,rep,message\n";
    for (const auto* r : failed) {
      std::string msg = r->error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << r->method << ',' << r->rep << ',' << msg << '\n';
    }
  }
  for (const auto& pd : res.plots) {
    auto header = io::x_header(pd.x.cols());
    for (const char* h : {"truth", "mean", "lower05", "upper95"}) header.emplace_back(h);
    Matrix table(pd.x.rows(), pd.x.cols() + 4);
    table << pd.x, pd.truth, pd.mean, pd.lower, pd.upper;
    io::write_csv(dir / ("plot_" + pd.method + "_rep" + std::to_string(pd.rep) + ".csv"), header,
                  table);
  }
  for (const auto& sd : res.sensitivity) {
    std::vector<std::string> header{"x"};
    for (Index j = 1; j <= sd.contribution.cols(); ++j) header.push_back("nuF" + std::to_string(j));
    Matrix table(sd.x.size(), sd.contribution.cols() + 1);
    table << sd.x, sd.contribution;
    io::write_csv(dir / ("sensitivity_rep" + std::to_string(sd.rep) + ".csv"), header, table);
  }
  return res;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string function = "logistic1d";
  Index dim = 0;
  Index n = 20;
  Index n_test = 100;
  std::uint64_t seed = 1;
  std::optional<double> noise_sd;
  std::string output_dir = ".";
  std::string train_name = "train.csv";
  std::string test_name = "test.csv";
};

/// train.csv: x1..xp, y (noisy); test.csv: x1..xp, y (noise-free truth).
/// Inputs are the unit-cube coordinates the test function is defined on.
inline std::pair<fs::path, fs::path> cmd_synth(const SynthOptions& opt) {
  const TestFunction f = make_test_function(opt.function, opt.dim);
  if (opt.n < 1 || opt.n_test < 1) throw config_error("n and n_test must be >= 1");
  Rng rng(mix_seed(opt.seed));
  const Matrix x = lhs(opt.n, f.dim, rng);
  const Evaluation train = eval_function(f, x, rng, opt.noise_sd);
  const Matrix xt = lhs(opt.n_test, f.dim, rng);
  const Evaluation test = eval_function(f, xt, rng, opt.noise_sd);

  const fs::path dir = ensure_dir(opt.output_dir);
  auto header = io::x_header(f.dim);
  header.emplace_back("y");
  Matrix a(x.rows(), f.dim + 1), b(xt.rows(), f.dim + 1);
  a << x, train.noisy;
  b << xt, test.truth;
  const fs::path tp = dir / opt.train_name, vp = dir / opt.test_name;
  io::write_csv(tp, header, a);
  io::write_csv(vp, header, b);
  return {tp, vp};
}

}  // namespace monowarp::cli
