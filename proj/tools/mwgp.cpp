#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "monowarp/cli.hpp"

namespace mw = monowarp;

int main(int argc, char** argv) {
  CLI::App app{"Monotone GP and deep GP surrogate modelling"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string output_dir = ".";
  app.add_option("--seed", seed, "Override the random seed");
  app.add_option("--threads", threads, "Maximum worker threads")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "Directory for output files");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a training CSV and save the chain");
  std::string config_path, train, model;
  std::vector<std::string> sets;
  fit->add_option("--config", config_path, "key = value run configuration file");
  fit->add_option("--train", train, "Training CSV (x1..xp, y); overrides 'train'");
  fit->add_option("--model", model, "mono-gp | mw-dgp | dgp | gp; overrides 'model'");
  fit->add_option("--set", sets, "Extra key=value settings, applied after the config file");

  // predict
  auto* pred = app.add_subcommand("predict", "Predict from a saved chain");
  mw::cli::PredictOptions popt;
  pred->add_option("chain", popt.chain, "Chain file written by fit")->required();
  pred->add_option("--test", popt.test, "CSV whose first p columns are query inputs");
  pred->add_option("--grid", popt.grid, "Grid spec a:b:k on every input");
  pred->add_flag("--full-cov", popt.full_cov, "Also write the full predictive covariance");
  pred->add_flag("--force", popt.force, "Allow --full-cov beyond the size guard");
  pred->add_flag("--samples", popt.samples, "Also write per-draw predictive locations");
  pred->add_option("--output", popt.output_name, "Prediction file name");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a benchmark experiment");
  std::string spec;
  bench->add_option("spec", spec, "Built-in spec name or spec file")->required();
  bench->add_flag_callback("--list", [] {
    for (const auto& [name, _] : mw::io::builtin_specs()) std::cout << name << '\n';
    std::exit(0);
  }, "List built-in specs and exit");

  // synth
  auto* synth = app.add_subcommand("synth", "Write synthetic train/test CSVs");
  mw::cli::SynthOptions sopt;
  synth->add_option("function", sopt.function, "Test function name")->required();
  synth->add_option("--n", sopt.n, "Training size");
  synth->add_option("--n-test", sopt.n_test, "Test size");
  synth->add_option("--dim", sopt.dim, "Input dimension (functions that allow it)");
  synth->add_option("--noise-sd", sopt.noise_sd, "Override the function's noise level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) {
      mw::io::KeyValues kv;
      if (!config_path.empty()) kv = mw::io::read_key_values(mw::io::fs::path(config_path));
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw mw::config_error("--set expects key=value, got '" + s + "'");
        kv[mw::io::trim(s.substr(0, eq))] = mw::io::trim(s.substr(eq + 1));
      }
      if (!train.empty()) kv["train"] = train;
      if (!model.empty()) kv["model"] = model;
      if (seed) kv["seed"] = std::to_string(*seed);
      if (app.get_option("--output-dir")->count() > 0 || !kv.count("output_dir"))
        kv["output_dir"] = output_dir;
      mw::cli::FitOptions opt{mw::io::parse_run_config(kv)};
      const auto res = mw::cli::cmd_fit(opt);
      std::cout << "wrote " << res.chain_path.string() << " and " << res.report_path.string() << '\n';
    } else if (*pred) {
      popt.output_dir = output_dir;
      const auto res = mw::cli::cmd_predict(popt);
      std::cout << "wrote " << res.predictions_path.string() << " (" << res.x.rows() << " rows)\n";
    } else if (*bench) {
      mw::cli::BenchOptions opt{spec, seed, threads, output_dir};
      const auto res = mw::cli::cmd_bench(opt);
      std::size_t failed = 0;
      for (const auto& r : res.rows) failed += r.ok() ? 0 : 1;
      std::cout << "wrote " << res.rows.size() << " metric rows";
      if (failed) std::cout << " (" << failed << " failed, see errors.csv)";
      std::cout << '\n';
    } else if (*synth) {
      if (seed) sopt.seed = *seed;
      sopt.output_dir = output_dir;
      const auto [tr, te] = mw::cli::cmd_synth(sopt);
      std::cout << "wrote " << tr.string() << " and " << te.string() << '\n';
    }
  } catch (const mw::usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
