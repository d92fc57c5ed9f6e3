#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "monowarp/cli.hpp"

using namespace monowarp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "monowarp_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(MWGP_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

io::RunConfig quick_config(const fs::path& train, const fs::path& out) {
  io::KeyValues kv{{"train", train.string()}, {"output_dir", out.string()}};
  return io::parse_run_config(kv);
}

/// logistic1d training data (n = 20) written by cmd_synth.
fs::path synth_logistic(const fs::path& dir, std::uint64_t seed = 1) {
  cli::SynthOptions s;
  s.function = "logistic1d";
  s.n = 20;
  s.n_test = 50;
  s.seed = seed;
  s.output_dir = dir.string();
  return cli::cmd_synth(s).first;
}

}  // namespace

TEST(Csv, ParsesHeaderAndRows) {
  std::istringstream in("x1,y\n0.5, 1\n\n1e-3,-2.5\n");
  const io::Table t = io::read_csv(in);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x1", "y"}));
  EXPECT_EQ(t.data.rows(), 2);
  EXPECT_EQ(t.data(1, 0), 1e-3);
}

TEST(Csv, NonNumericCellCitesLineAndColumn) {
  std::istringstream in("x1,x2,y\n1,2,3\n4,abc,6\n");
  try {
    io::read_csv(in, "train.csv");
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
  std::istringstream ragged("a,b\n1\n");
  EXPECT_THROW(io::read_csv(ragged), parse_error);
}

TEST(Fmt, RoundTripsDoubles) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
    EXPECT_EQ(std::strtod(io::fmt(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(io::fmt(0.5), "0.5");
}

TEST(InputCoder, RoundTrip) {
  Rng rng(2);
  Matrix x(40, 3);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1e3, 5e3);
  x.col(2).setConstant(7.0);
  const io::InputCoder c = io::InputCoder::fit(x);
  const Matrix u = c.code(x);
  EXPECT_GE(u.minCoeff(), 0.0);
  EXPECT_LE(u.maxCoeff(), 1.0);
  EXPECT_EQ(u.col(0).minCoeff(), 0.0);
  EXPECT_EQ(u.col(0).maxCoeff(), 1.0);
  const Matrix back = c.decode(u);
  for (Index i = 0; i < x.size(); ++i)
    EXPECT_NEAR(back.data()[i], x.data()[i], 1e-12 * std::max(1.0, std::abs(x.data()[i])));
  EXPECT_THROW(c.code(Matrix::Zero(2, 2)), dimension_mismatch);
}

TEST(RunConfig, KeysAndErrors) {
  io::RunConfig c = io::parse_run_config({{"model", "mw-dgp"}});
  EXPECT_EQ(c.mcmc.total, 10000);
  c = io::parse_run_config({{"model", "dgp"}, {"total", "300"}, {"burn", "100"}});
  EXPECT_EQ(c.mcmc.total, 300);
  EXPECT_EQ(io::parse_run_config({}).mcmc.total, 5000);
  try {
    io::parse_run_config({{"thinn", "3"}});
    FAIL();
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("thinn"), std::string::npos);
  }
  EXPECT_THROW(io::parse_run_config({{"burn", "x"}}), config_error);
  EXPECT_THROW(io::parse_run_config({{"model", "tgp"}}), config_error);
  std::istringstream dup("a = 1\na = 2\n");
  EXPECT_THROW(io::read_key_values(dup, "cfg"), config_error);
}

TEST(Synth, ShapesAndDeterminism) {
  const fs::path d = scratch("synth");
  const auto [train, test] = cli::cmd_synth({"logistic1d", 0, 20, 100, 4, std::nullopt, d.string()});
  const io::Table t = io::read_csv(train);
  EXPECT_EQ(t.data.rows(), 20);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x1", "y"}));
  const std::string first = slurp(train) + slurp(test);
  cli::cmd_synth({"logistic1d", 0, 20, 100, 4, std::nullopt, d.string()});
  EXPECT_EQ(first, slurp(train) + slurp(test));

  const auto [tr5, te5] = cli::cmd_synth({"lopez5d", 0, 100, 1000, 4, std::nullopt, d.string()});
  EXPECT_EQ(io::read_csv(tr5).data.cols(), 6);
  const io::Table t5 = io::read_csv(te5);
  EXPECT_EQ(t5.data.cols(), 6);
  EXPECT_EQ(t5.data.rows(), 1000);
  const TestFunction f = make_test_function("lopez5d");
  EXPECT_NEAR(t5.data(0, 5), f(t5.data.row(0).head(5).transpose()), 1e-15);
  EXPECT_THROW(cli::cmd_synth({"nope", 0, 5, 5, 1, std::nullopt, d.string()}), unknown_function);
}

TEST(FitPredict, RoundTripAndDeterminism) {
  const fs::path d = scratch("fit");
  const fs::path train = synth_logistic(d);
  const cli::FitResult r = cli::cmd_fit({quick_config(train, d / "a")});
  ASSERT_TRUE(r.chain.mono);
  EXPECT_EQ(r.chain.mono->draws.size(), 400u);
  cli::cmd_fit({quick_config(train, d / "b")});
  EXPECT_EQ(slurp(d / "a" / "chain.json"), slurp(d / "b" / "chain.json"));
  const auto report = io::json::parse(slurp(r.report_path));
  EXPECT_EQ(report["retained"], 400);
  EXPECT_TRUE(report["acceptance"].contains("nu_1"));

  // the saved chain reproduces the in-memory one
  const io::SavedChain loaded = io::load_chain(r.chain_path);
  EXPECT_EQ(io::chain_to_json(loaded).dump(), io::chain_to_json(r.chain).dump());

  cli::PredictOptions p;
  p.chain = r.chain_path.string();
  p.test = train.string();
  p.output_dir = (d / "pred").string();
  const cli::PredictResult pr = cli::cmd_predict(p);
  EXPECT_TRUE(pr.summary.mean.allFinite());
  EXPECT_TRUE((pr.summary.var.array() > 0.0).all());
  const io::Table out = io::read_csv(pr.predictions_path);
  EXPECT_EQ(out.header, (std::vector<std::string>{"x1", "mean", "var", "lower95", "upper95"}));
  EXPECT_EQ(out.data.rows(), 20);
}

TEST(FitPredict, TrainingPointMeanNearObservation) {
  const fs::path d = scratch("nearobs");
  // nearly noise-free data so s^2 is small
  cli::SynthOptions s;
  s.function = "logistic1d";
  s.n = 20;
  s.noise_sd = 0.01;
  s.output_dir = d.string();
  const fs::path train = cli::cmd_synth(s).first;
  const cli::FitResult r = cli::cmd_fit({quick_config(train, d)});
  cli::PredictOptions p;
  p.chain = r.chain_path.string();
  p.test = train.string();
  p.output_dir = d.string();
  const cli::PredictResult pr = cli::cmd_predict(p);
  const io::Table t = io::read_csv(train);
  EXPECT_LT((pr.summary.mean - t.data.col(1)).cwiseAbs().maxCoeff(), 0.2);
}

TEST(Predict, GridSpecSamplesAndGuards) {
  const fs::path d = scratch("predict");
  const fs::path train = synth_logistic(d);
  const cli::FitResult r = cli::cmd_fit({quick_config(train, d)});
  cli::PredictOptions p;
  p.chain = r.chain_path.string();
  p.grid = "0:1:101";
  p.samples = true;
  p.output_dir = d.string();
  const cli::PredictResult pr = cli::cmd_predict(p);
  EXPECT_EQ(pr.x.rows(), 101);
  const io::Table s = io::read_csv(d / "samples.csv");
  EXPECT_EQ(s.data.rows(), 101);
  EXPECT_EQ(s.data.cols(), 400);
  for (Index t = 0; t < s.data.cols(); ++t)
    for (Index i = 1; i < 101; ++i) ASSERT_GE(s.data(i, t), s.data(i - 1, t));

  p.grid = "0:1:2000";
  p.samples = false;
  p.full_cov = true;
  EXPECT_THROW(cli::cmd_predict(p), config_error);
  p.grid = "0:1:40";
  cli::cmd_predict(p);
  EXPECT_EQ(io::read_csv(d / "covariance.csv").data.rows(), 40);
  p.grid = "0:1";
  EXPECT_THROW(cli::cmd_predict(p), config_error);

  Matrix x2 = Matrix::Ones(3, 3);
  io::write_csv(d / "wide.csv", {"a", "b", "c"}, x2);
  cli::PredictOptions q;
  q.chain = r.chain_path.string();
  q.test = (d / "wide.csv").string();
  q.output_dir = d.string();
  EXPECT_NO_THROW(cli::cmd_predict(q));  // extra columns are ignored
}

TEST(ChainFile, VersionAndModelChecks) {
  const fs::path d = scratch("chainfile");
  const fs::path train = synth_logistic(d);
  io::RunConfig cfg = quick_config(train, d);
  cfg.model = ModelKind::gp;
  cfg.mcmc.total = 300;
  cfg.mcmc.burn = 100;
  const cli::FitResult r = cli::cmd_fit({cfg});
  ASSERT_TRUE(r.chain.deep);
  const io::SavedChain back = io::load_chain(r.chain_path);
  EXPECT_EQ(back.model(), ModelKind::gp);
  EXPECT_EQ(io::chain_to_json(back).dump(), io::chain_to_json(r.chain).dump());

  auto j = io::json::parse(slurp(r.chain_path));
  j["format_version"] = 99;
  std::ofstream(d / "future.json") << j.dump();
  EXPECT_THROW(io::load_chain(d / "future.json"), version_mismatch);
  j["format_version"] = io::chain_format_version;
  j["model"] = "tgp";
  std::ofstream(d / "unknown.json") << j.dump();
  EXPECT_THROW(io::load_chain(d / "unknown.json"), config_error);
  std::ofstream(d / "junk.json") << "{not json";
  EXPECT_THROW(io::load_chain(d / "junk.json"), parse_error);
}

TEST(Bench, SpecParsing) {
  EXPECT_THROW(io::load_experiment_spec("no-such-spec"), spec_error);
  std::istringstream bad("function = logistic1d\nmethods = mono-gp, lineq\n");
  try {
    io::parse_experiment_spec(io::read_key_values<spec_error>(bad, "s"));
    FAIL();
  } catch (const spec_error& e) {
    EXPECT_NE(std::string(e.what()).find("lineq"), std::string::npos);
  }
  std::istringstream typo("function = logistic1d\nrepz = 3\n");
  EXPECT_THROW(io::parse_experiment_spec(io::read_key_values<spec_error>(typo, "s")), spec_error);
  std::istringstream badfn("function = rosenbrock\n");
  EXPECT_THROW(io::parse_experiment_spec(io::read_key_values<spec_error>(badfn, "s")), spec_error);
  for (const auto& [name, _] : io::builtin_specs()) EXPECT_NO_THROW(io::load_experiment_spec(name));
}

TEST(Bench, OneRepTwoMethodsWritesTwoRows) {
  const fs::path d = scratch("bench");
  std::ofstream(d / "tiny.spec") << "function = logistic1d\nmethods = mono-gp, gp\nn = 12\n"
                                    "n_test = 20\nreps = 1\nmono_total = 200\nmono_burn = 50\n"
                                    "dgp_total = 200\ndgp_burn = 50\nplot_data = true\n";
  const ExperimentResult r = cli::cmd_bench({(d / "tiny.spec").string(), std::nullopt, 1, d.string()});
  EXPECT_EQ(r.rows.size(), 2u);
  const std::string metrics = slurp(d / "metrics.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "method,rep,rmse,crps,fit_seconds,predict_seconds");
  EXPECT_TRUE(fs::exists(d / "plot_mono-gp_rep0.csv"));
  EXPECT_TRUE(fs::exists(d / "plot_gp_rep0.csv"));
}

TEST(Bench, SmokeSpecIsQuick) {
  const fs::path d = scratch("smoke");
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult r = cli::cmd_bench({"logistic1d-smoke", std::nullopt, 1, d.string()});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 120.0);
  for (const auto& row : r.rows) EXPECT_TRUE(row.ok()) << row.error;
}

TEST(Tool, ExitCodes) {
  const fs::path d = scratch("tool");
  EXPECT_EQ(run_tool("--help"), 0);
  EXPECT_EQ(run_tool(""), 1);
  EXPECT_EQ(run_tool("frobnicate"), 1);
  EXPECT_EQ(run_tool("synth logistic1d --n 20 --output-dir " + d.string()), 0);
  EXPECT_EQ(run_tool("synth nope --output-dir " + d.string()), 1);
  EXPECT_EQ(run_tool("bench no-such-spec --output-dir " + d.string()), 1);
  EXPECT_EQ(run_tool("fit --train " + (d / "train.csv").string() + " --set total=300 --set burn=100 --output-dir " + d.string()), 0);
  EXPECT_EQ(run_tool("predict " + (d / "chain.json").string() + " --grid 0:1:11 --output-dir " + d.string()), 0);
  EXPECT_EQ(io::read_csv(d / "predictions.csv").data.rows(), 11);
  EXPECT_EQ(run_tool("fit --train " + (d / "missing.csv").string() + " --output-dir " + d.string()), 1);
  // numeric failure: a single allowed ESS proposal is soon rejected
  EXPECT_EQ(run_tool("fit --train " + (d / "train.csv").string() +
                     " --set max_shrinks=1 --output-dir " + d.string()),
            2);
}
