#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bench.hpp"
#include "dgp.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "monogp.hpp"

namespace monowarp::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Number formatting and parsing

/// Shortest decimal that reads back to the same double (%.17g fallback).
inline std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  Matrix data;
};

/// Header row plus numeric rows, comma separated. Errors cite the 1-based
/// file line and column.
inline Table read_csv(std::istream& in, const std::string& label = "<stream>") {
  Table t;
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw parse_error(label + ": line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " columns, found " +
                        std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!parse_double(cells[c], row[c]))
        throw parse_error(label + ": line " + std::to_string(lineno) + ", column " +
                          std::to_string(c + 1) + ": not a number: '" + cells[c] + "'");
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw parse_error(label + ": empty file");
  t.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      t.data(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return t;
}

inline Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path.string());
  return read_csv(in, path.string());
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& data) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << fmt(data(r, c));
    out << '\n';
  }
}

inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const Matrix& data) {
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path.string());
  write_csv(out, header, data);
}

inline std::vector<std::string> x_header(Index p) {
  std::vector<std::string> h;
  for (Index j = 1; j <= p; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

// ---------------------------------------------------------------------------
// Input coding

/// Per-column affine map of the training range onto [0, 1]. A constant
/// column maps to 0 with unit scale.
struct InputCoder {
  Vector min;
  Vector max;

  static InputCoder fit(const Matrix& x) {
    if (x.rows() < 1) throw too_few_observations("no rows to code");
    return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
  }
  Index dim() const { return min.size(); }
  Vector scale() const {
    Vector s = max - min;
    for (Index j = 0; j < s.size(); ++j)
      if (!(s[j] > 0.0)) s[j] = 1.0;
    return s;
  }
  Matrix code(const Matrix& x) const {
    if (x.cols() != dim())
      throw dimension_mismatch("expected " + std::to_string(dim()) + " input columns, got " +
                               std::to_string(x.cols()));
    Matrix out = (x.rowwise() - min.transpose()).array().rowwise() / scale().transpose().array();
    // training extremes land exactly on the unit interval
    for (Index j = 0; j < dim(); ++j)
      for (Index i = 0; i < x.rows(); ++i) {
        if (x(i, j) == min[j]) out(i, j) = 0.0;
        else if (x(i, j) == max[j] && max[j] > min[j]) out(i, j) = 1.0;
      }
    return out;
  }
  Matrix decode(const Matrix& u) const {
    return (u.array().rowwise() * scale().transpose().array()).rowwise() + min.transpose().array();
  }
};

// ---------------------------------------------------------------------------
// key = value files

using KeyValues = std::map<std::string, std::string>;

/// '#' starts a comment; blank lines are ignored; duplicate keys are errors.
template <class Error = config_error>
KeyValues read_key_values(std::istream& in, const std::string& label) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(label + ": line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(label + ": line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw Error(label + ": duplicate key '" + key + "'");
  }
  return kv;
}

template <class Error = config_error>
KeyValues read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_key_values<Error>(in, path.string());
}

template <class Error>
double kv_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  if (!parse_double(v, d)) throw Error("key '" + key + "': not a number: '" + v + "'");
  return d;
}

template <class Error>
long long kv_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || errno != 0 || end != v.c_str() + v.size())
    throw Error("key '" + key + "': not an integer: '" + v + "'");
  return i;
}

template <class Error>
bool kv_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw Error("key '" + key + "': expected true/false, got '" + v + "'");
}

// ---------------------------------------------------------------------------
// Run configuration (fit)

struct RunConfig {
  ModelKind model = ModelKind::mono_gp;
  MCMCConfig mcmc{};
  bool mcmc_total_set = false;  // deep GP models default to their own schedule otherwise
  PriorConfig prior{};
  DgpPriors dgp_prior{};
  std::string train;
  std::string test;
  std::string output_dir = ".";
};

inline const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "model", "total", "burn", "thin", "n_g", "seed", "variant", "max_shrinks",
      "alpha_nu", "beta_nu", "alpha_theta", "beta_theta", "alpha_g", "beta_g",
      "train", "test", "output_dir"};
  return keys;
}

inline void apply_run_key(RunConfig& c, const std::string& k, const std::string& v) {
  using E = config_error;
  if (k == "model") {
    c.model = model_kind_from_string(v);
    if (!c.mcmc_total_set && c.model != ModelKind::mono_gp) {
      const MCMCConfig d = dgp_default_mcmc();
      c.mcmc.total = d.total;
      c.mcmc.burn = d.burn;
      c.mcmc.thin = d.thin;
    }
  } else if (k == "total") {
    c.mcmc.total = static_cast<int>(kv_int<E>(k, v));
    c.mcmc_total_set = true;
  } else if (k == "burn") c.mcmc.burn = static_cast<int>(kv_int<E>(k, v));
  else if (k == "thin") c.mcmc.thin = static_cast<int>(kv_int<E>(k, v));
  else if (k == "n_g") c.mcmc.n_g = static_cast<int>(kv_int<E>(k, v));
  else if (k == "seed") c.mcmc.seed = static_cast<std::uint64_t>(kv_int<E>(k, v));
  else if (k == "variant") c.mcmc.variant = mono_variant_from_string(v);
  else if (k == "max_shrinks") c.mcmc.ess.max_shrinks = static_cast<int>(kv_int<E>(k, v));
  else if (k == "alpha_nu") c.prior.alpha_nu = kv_double<E>(k, v);
  else if (k == "beta_nu") c.prior.beta_nu = kv_double<E>(k, v);
  else if (k == "alpha_theta") c.prior.alpha_theta = kv_double<E>(k, v);
  else if (k == "beta_theta") c.prior.beta_theta = kv_double<E>(k, v);
  else if (k == "alpha_g") c.dgp_prior.alpha_g = kv_double<E>(k, v);
  else if (k == "beta_g") c.dgp_prior.beta_g = kv_double<E>(k, v);
  else if (k == "train") c.train = v;
  else if (k == "test") c.test = v;
  else if (k == "output_dir") c.output_dir = v;
  else throw config_error("unknown config key '" + k + "'");
}

/// "model" is applied first so an explicit schedule always wins over the
/// model's default one.
inline RunConfig parse_run_config(const KeyValues& kv) {
  RunConfig c;
  if (auto it = kv.find("model"); it != kv.end()) apply_run_key(c, it->first, it->second);
  for (const auto& [k, v] : kv)
    if (k != "model") apply_run_key(c, k, v);
  const double a = c.prior.alpha_theta, b = c.prior.beta_theta;
  c.dgp_prior.alpha_theta_w = c.dgp_prior.alpha_theta_y = a;
  c.dgp_prior.beta_theta_w = c.dgp_prior.beta_theta_y = b;
  c.mcmc.validate();
  c.prior.validate();
  c.dgp_prior.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Experiment spec files

inline std::vector<ModelKind> parse_methods(const std::string& v) {
  std::vector<ModelKind> out;
  if (trim(v).empty()) return out;
  for (const auto& name : split(v, ',')) {
    try {
      out.push_back(model_kind_from_string(name));
    } catch (const error&) {
      throw spec_error("methods: unknown method '" + name + "'");
    }
  }
  return out;
}

inline ExperimentSpec parse_experiment_spec(const KeyValues& kv) {
  using E = spec_error;
  ExperimentSpec s;
  for (const auto& [k, v] : kv) {
    if (k == "name") s.name = v;
    else if (k == "function") s.function = v;
    else if (k == "dim") s.dim = kv_int<E>(k, v);
    else if (k == "methods") s.methods = parse_methods(v);
    else if (k == "n") s.n = kv_int<E>(k, v);
    else if (k == "n_test") s.n_test = kv_int<E>(k, v);
    else if (k == "test_design") s.test_design = v;
    else if (k == "reps") s.reps = static_cast<int>(kv_int<E>(k, v));
    else if (k == "seed") s.seed = static_cast<std::uint64_t>(kv_int<E>(k, v));
    else if (k == "noise_sd") s.noise_sd = kv_double<E>(k, v);
    else if (k == "mono_total") s.mono_mcmc.total = static_cast<int>(kv_int<E>(k, v));
    else if (k == "mono_burn") s.mono_mcmc.burn = static_cast<int>(kv_int<E>(k, v));
    else if (k == "mono_thin") s.mono_mcmc.thin = static_cast<int>(kv_int<E>(k, v));
    else if (k == "dgp_total") s.dgp_mcmc.total = static_cast<int>(kv_int<E>(k, v));
    else if (k == "dgp_burn") s.dgp_mcmc.burn = static_cast<int>(kv_int<E>(k, v));
    else if (k == "dgp_thin") s.dgp_mcmc.thin = static_cast<int>(kv_int<E>(k, v));
    else if (k == "n_g") s.mono_mcmc.n_g = s.dgp_mcmc.n_g = static_cast<int>(kv_int<E>(k, v));
    else if (k == "variant")
      s.mono_mcmc.variant = s.dgp_mcmc.variant = [&] {
        try {
          return mono_variant_from_string(v);
        } catch (const error& e) {
          throw spec_error(std::string("variant: ") + e.what());
        }
      }();
    else if (k == "timings") s.timings = kv_bool<E>(k, v);
    else if (k == "plot_data") s.plot_data = kv_bool<E>(k, v);
    else if (k == "sensitivity") s.sensitivity = kv_bool<E>(k, v);
    else throw spec_error("unknown spec field '" + k + "'");
  }
  try {
    s.validate();
  } catch (const spec_error&) {
    throw;
  } catch (const error& e) {
    throw spec_error(e.what());
  }
  return s;
}

/// Desk-scale versions of the benchmark comparisons.
inline std::map<std::string, std::string> builtin_specs() {
  return {
      {"logistic1d-smoke",
       "name = logistic1d-smoke\nfunction = logistic1d\nmethods = mono-gp, gp\n"
       "n = 20\nn_test = 200\nreps = 2\nseed = 1\n"},
      {"logistic2d",
       "name = logistic2d\nfunction = logistic2d\nmethods = mono-gp, gp\n"
       "n = 100\nn_test = 2500\ntest_design = grid\nreps = 10\nseed = 2\n"},
      {"lopez5d",
       "name = lopez5d\nfunction = lopez5d\nmethods = mono-gp, gp\n"
       "n = 100\nn_test = 1000\nreps = 5\nseed = 3\n"},
      {"cross-in-tray",
       "name = cross-in-tray\nfunction = cross-in-tray\nmethods = mw-dgp, gp\n"
       "n = 40\nn_test = 1000\nreps = 5\nseed = 4\n"},
      {"michalewicz",
       "name = michalewicz\nfunction = michalewicz\nmethods = mw-dgp, dgp, gp\n"
       "n = 100\nn_test = 1000\nreps = 5\nseed = 5\n"},
      {"plateau",
       "name = plateau\nfunction = plateau\ndim = 2\nmethods = mono-gp, dgp\n"
       "n = 100\nn_test = 1000\nreps = 3\nseed = 6\n"},
  };
}

inline ExperimentSpec load_experiment_spec(const std::string& name_or_path) {
  const auto builtins = builtin_specs();
  if (auto it = builtins.find(name_or_path); it != builtins.end()) {
    std::istringstream in(it->second);
    return parse_experiment_spec(read_key_values<spec_error>(in, name_or_path));
  }
  if (!fs::exists(name_or_path))
    throw spec_error("no built-in spec or file named '" + name_or_path + "'");
  return parse_experiment_spec(read_key_values<spec_error>(fs::path(name_or_path)));
}

// ---------------------------------------------------------------------------
// Chain files

constexpr int chain_format_version = 1;

using nlohmann::json;

inline json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != m.rows()) throw parse_error("matrix row count mismatch");
  for (Index i = 0; i < m.rows(); ++i) {
    const Vector r = vector_from_json(data[static_cast<std::size_t>(i)]);
    if (r.size() != m.cols()) throw parse_error("matrix column count mismatch");
    m.row(i) = r.transpose();
  }
  return m;
}

inline json counts_json(const AcceptanceCounts& a) {
  return {{"proposed", a.proposed}, {"accepted", a.accepted}, {"factor_failures", a.factor_failures}};
}
inline AcceptanceCounts counts_from_json(const json& j) {
  return {j.at("proposed").get<long>(), j.at("accepted").get<long>(),
          j.at("factor_failures").get<long>()};
}
inline json counts_json(const std::vector<AcceptanceCounts>& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back(counts_json(c));
  return a;
}
inline std::vector<AcceptanceCounts> counts_vec_from_json(const json& j) {
  std::vector<AcceptanceCounts> out;
  for (const auto& c : j) out.push_back(counts_from_json(c));
  return out;
}

inline json mcmc_json(const MCMCConfig& m) {
  return {{"total", m.total},       {"burn", m.burn},
          {"thin", m.thin},         {"n_g", m.n_g},
          {"seed", m.seed},         {"variant", to_string(m.variant)},
          {"max_shrinks", m.ess.max_shrinks}};
}
inline MCMCConfig mcmc_from_json(const json& j) {
  MCMCConfig m;
  m.total = j.at("total").get<int>();
  m.burn = j.at("burn").get<int>();
  m.thin = j.at("thin").get<int>();
  m.n_g = j.at("n_g").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.variant = mono_variant_from_string(j.at("variant").get<std::string>());
  m.ess.max_shrinks = j.at("max_shrinks").get<int>();
  return m;
}

/// A fitted model plus the input coder used to produce its training inputs.
struct SavedChain {
  InputCoder coder;
  std::optional<MonoChain> mono;
  std::optional<DgpChain> deep;

  ModelKind model() const { return mono ? ModelKind::mono_gp : deep->model; }
  Index dim() const { return coder.dim(); }
};

inline json chain_to_json(const SavedChain& s) {
  json j;
  j["format_version"] = chain_format_version;
  j["model"] = to_string(s.model());
  j["coder"] = {{"min", to_json(s.coder.min)}, {"max", to_json(s.coder.max)}};
  if (s.mono) {
    const MonoChain& c = *s.mono;
    j["grid"] = to_json(c.grid.nodes());
    j["variant"] = to_string(c.variant);
    j["n"] = c.n;
    j["p"] = c.p;
    j["mcmc"] = mcmc_json(c.mcmc);
    j["prior"] = {{"alpha_nu", c.prior.alpha_nu},
                  {"beta_nu", c.prior.beta_nu},
                  {"alpha_theta", c.prior.alpha_theta},
                  {"beta_theta", c.prior.beta_theta}};
    j["nu_moves"] = counts_json(c.nu_moves);
    j["theta_moves"] = counts_json(c.theta_moves);
    j["ess_proposals"] = c.ess_proposals;
    j["ess_updates"] = c.ess_updates;
    j["loglik_trace"] = c.loglik_trace;
    json draws = json::array();
    for (const auto& d : c.draws)
      draws.push_back({{"z_g", to_json(d.z_g)},
                       {"nu", to_json(d.nu)},
                       {"theta", to_json(d.theta)},
                       {"mu_hat", d.mu_hat},
                       {"s2", d.s2}});
    j["draws"] = std::move(draws);
  } else {
    const DgpChain& c = *s.deep;
    j["x"] = to_json(c.x);
    j["y"] = to_json(c.y);
    j["y_center"] = c.y_center;
    j["grid"] = to_json(c.grid.nodes());
    j["variant"] = to_string(c.variant);
    j["mcmc"] = mcmc_json(c.mcmc);
    j["prior"] = {{"alpha_theta_w", c.prior.alpha_theta_w}, {"beta_theta_w", c.prior.beta_theta_w},
                  {"alpha_theta_y", c.prior.alpha_theta_y}, {"beta_theta_y", c.prior.beta_theta_y},
                  {"alpha_g", c.prior.alpha_g},             {"beta_g", c.prior.beta_g},
                  {"g_min", c.prior.g_min}};
    j["carry_inputs"] = to_json(c.carry_inputs);
    j["theta_w_moves"] = counts_json(c.theta_w_moves);
    j["theta_y_moves"] = counts_json(c.theta_y_moves);
    j["g_moves"] = counts_json(c.g_moves);
    j["ess_proposals"] = c.ess_proposals;
    j["ess_updates"] = c.ess_updates;
    j["loglik_trace"] = c.loglik_trace;
    json draws = json::array();
    for (const auto& d : c.draws)
      draws.push_back({{"theta_y", to_json(d.theta_y)},
                       {"g", d.g},
                       {"theta_w", to_json(d.theta_w)},
                       {"warp", to_json(d.warp)},
                       {"carried", to_json(d.carried)}});
    j["draws"] = std::move(draws);
  }
  return j;
}

inline SavedChain chain_from_json(const json& j) {
  if (!j.contains("format_version") || !j.contains("model"))
    throw parse_error("not a chain file: missing format_version or model");
  const int version = j.at("format_version").get<int>();
  if (version != chain_format_version)
    throw version_mismatch("chain format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(chain_format_version) +
                           ")");
  try {
    SavedChain s;
    s.coder = {vector_from_json(j.at("coder").at("min")), vector_from_json(j.at("coder").at("max"))};
    const ModelKind model = model_kind_from_string(j.at("model").get<std::string>());
    if (model == ModelKind::mono_gp) {
      MonoChain c;
      c.grid = RefGrid(vector_from_json(j.at("grid")));
      c.variant = mono_variant_from_string(j.at("variant").get<std::string>());
      c.n = j.at("n").get<Index>();
      c.p = j.at("p").get<Index>();
      c.mcmc = mcmc_from_json(j.at("mcmc"));
      const json& pr = j.at("prior");
      c.prior = {pr.at("alpha_nu").get<double>(), pr.at("beta_nu").get<double>(),
                 pr.at("alpha_theta").get<double>(), pr.at("beta_theta").get<double>()};
      c.nu_moves = counts_vec_from_json(j.at("nu_moves"));
      c.theta_moves = counts_vec_from_json(j.at("theta_moves"));
      c.ess_proposals = j.at("ess_proposals").get<long>();
      c.ess_updates = j.at("ess_updates").get<long>();
      c.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
      for (const auto& d : j.at("draws"))
        c.draws.push_back({matrix_from_json(d.at("z_g")), vector_from_json(d.at("nu")),
                           vector_from_json(d.at("theta")), d.at("mu_hat").get<double>(),
                           d.at("s2").get<double>()});
      if (c.p != s.coder.dim()) throw parse_error("coder dimension does not match chain");
      s.mono = std::move(c);
    } else {
      DgpChain c;
      c.model = model;
      c.x = matrix_from_json(j.at("x"));
      c.y = vector_from_json(j.at("y"));
      c.y_center = j.at("y_center").get<double>();
      c.grid = RefGrid(vector_from_json(j.at("grid")));
      c.variant = mono_variant_from_string(j.at("variant").get<std::string>());
      c.mcmc = mcmc_from_json(j.at("mcmc"));
      const json& pr = j.at("prior");
      c.prior.alpha_theta_w = pr.at("alpha_theta_w").get<double>();
      c.prior.beta_theta_w = pr.at("beta_theta_w").get<double>();
      c.prior.alpha_theta_y = pr.at("alpha_theta_y").get<double>();
      c.prior.beta_theta_y = pr.at("beta_theta_y").get<double>();
      c.prior.alpha_g = pr.at("alpha_g").get<double>();
      c.prior.beta_g = pr.at("beta_g").get<double>();
      c.prior.g_min = pr.at("g_min").get<double>();
      c.carry_inputs = matrix_from_json(j.at("carry_inputs"));
      c.theta_w_moves = counts_vec_from_json(j.at("theta_w_moves"));
      c.theta_y_moves = counts_vec_from_json(j.at("theta_y_moves"));
      c.g_moves = counts_from_json(j.at("g_moves"));
      c.ess_proposals = j.at("ess_proposals").get<long>();
      c.ess_updates = j.at("ess_updates").get<long>();
      c.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
      for (const auto& d : j.at("draws"))
        c.draws.push_back({vector_from_json(d.at("theta_y")), d.at("g").get<double>(),
                           vector_from_json(d.at("theta_w")), matrix_from_json(d.at("warp")),
                           matrix_from_json(d.at("carried"))});
      if (c.p() != s.coder.dim()) throw parse_error("coder dimension does not match chain");
      s.deep = std::move(c);
    }
    return s;
  } catch (const json::exception& e) {
    throw parse_error(std::string("malformed chain file: ") + e.what());
  }
}

inline void save_chain(const fs::path& path, const SavedChain& s) {
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path.string());
  out << chain_to_json(s).dump(1) << '\n';
}

inline SavedChain load_chain(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
  return chain_from_json(j);
}

}  // namespace monowarp::io
