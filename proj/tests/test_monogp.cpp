#include <gtest/gtest.h>

#include <cmath>

#include "monowarp/bench.hpp"
#include "monowarp/monogp.hpp"
#include "oracles.hpp"

using namespace monowarp;

namespace {

struct LogisticData {
  Matrix x;
  Vector y;
};

LogisticData logistic1d(std::uint64_t seed, Index n = 20) {
  const TestFunction f = make_test_function("logistic1d");
  Rng rng(mix_seed(seed));
  LogisticData d;
  d.x = lhs(n, 1, rng);
  d.y = eval_function(f, d.x, rng).noisy;
  return d;
}

const MonoChain& logistic_chain() {
  static const MonoChain chain = [] {
    const LogisticData d = logistic1d(1);
    MCMCConfig mcmc;
    mcmc.seed = 5;
    return fit_monogp(d.x, d.y, PriorConfig{}, mcmc);
  }();
  return chain;
}

}  // namespace

TEST(SummaryStats, ZeroAmplitude) {
  const Vector y = (Vector(4) << 1.0, 3.0, 2.0, 6.0).finished();
  const SummaryStats st = summary_stats(y, Matrix::Random(4, 1), Vector::Zero(1));
  EXPECT_DOUBLE_EQ(st.mu_hat, 3.0);
  EXPECT_DOUBLE_EQ(st.s2, (4.0 + 0.0 + 1.0 + 9.0) / 3.0);
}

TEST(SummaryStats, HandExample) {
  const Vector y = (Vector(2) << 0.0, 1.0).finished();
  const SummaryStats st = summary_stats(y, Vector::Zero(2), 0.0);
  EXPECT_DOUBLE_EQ(st.mu_hat, 0.5);
  EXPECT_DOUBLE_EQ(st.s2, 0.5);
  EXPECT_NEAR(log_marglik(y, Matrix::Zero(2, 1), Vector::Zero(1)), 0.693147, 1e-6);
}

TEST(SummaryStats, SingleInputPathNests) {
  Rng rng(3);
  Vector y(8), f(8);
  for (Index i = 0; i < 8; ++i) {
    y[i] = rng.normal();
    f[i] = rng.uniform();
  }
  const SummaryStats a = summary_stats(y, f, 2.5);
  const SummaryStats b = summary_stats(y, Matrix(f), Vector::Constant(1, 2.5));
  EXPECT_EQ(a.mu_hat, b.mu_hat);
  EXPECT_EQ(a.s2, b.s2);
}

TEST(SummaryStats, Errors) {
  EXPECT_THROW(summary_stats(Vector::Zero(3), Matrix::Zero(2, 1), Vector::Zero(1)), length_mismatch);
  EXPECT_THROW(summary_stats(Vector::Zero(2), Matrix::Zero(2, 2), Vector::Zero(2)), too_few_observations);
  EXPECT_THROW(log_marglik(Vector::Ones(4), Matrix::Zero(4, 1), Vector::Zero(1)), degenerate_residuals);
}

TEST(LogMarglik, DoublingResiduals) {
  Rng rng(4);
  const Index n = 9;
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = rng.normal();
  const Matrix f = Matrix::Zero(n, 2);
  const double a = log_marglik(y, f, Vector::Zero(2));
  const double b = log_marglik(2.0 * y, f, Vector::Zero(2));
  EXPECT_NEAR(b - a, -static_cast<double>(n - 2) * std::log(2.0), 1e-12);
}

TEST(LogMarglik, QuadratureOracleOnDifferences) {
  Rng rng(13);
  const Index n = 5;
  Vector y(n), f1(n), f2(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = 3.0 * rng.normal();
    f1[i] = rng.uniform();
    f2[i] = static_cast<double>(i) / (n - 1);
  }
  const double nu = 4.0;
  const double exact = log_marglik(y, Matrix(f1), Vector::Constant(1, nu)) -
                       log_marglik(y, Matrix(f2), Vector::Constant(1, nu));
  const Vector r1 = y - nu * (f1.array() - 0.5).matrix();
  const Vector r2 = y - nu * (f2.array() - 0.5).matrix();
  const double quad = oracle::log_mu_sigma_integral(r1, 600) - oracle::log_mu_sigma_integral(r2, 600);
  EXPECT_NEAR(exact, quad, 1e-3);
}

TEST(Proposal, UniformScaleWindowAndJacobian) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    double lj = 0.0;
    const double p = propose_scale(3.0, rng, lj);
    ASSERT_GE(p, 1.5);
    ASSERT_LE(p, 6.0);
    ASSERT_NEAR(lj, std::log(3.0 / p), 1e-15);
  }
}

TEST(GammaDensity, MatchesClosedForm) {
  EXPECT_NEAR(log_gamma_density(2.0, 1.5, 5.0),
              0.5 * std::log(2.0) - 10.0 + 1.5 * std::log(5.0) - std::lgamma(1.5), 1e-14);
}

TEST(MCMCConfig, RetainedArithmetic) {
  MCMCConfig m;
  EXPECT_EQ(m.retained_count(), 400);
  int kept = 0;
  for (int t = 1; t <= m.total; ++t) kept += m.keeps(t);
  EXPECT_EQ(kept, 400);
  m.total = 1234;
  m.burn = 17;
  m.thin = 7;
  kept = 0;
  for (int t = 1; t <= m.total; ++t) kept += m.keeps(t);
  EXPECT_EQ(kept, m.retained_count());
  m.burn = m.total;
  EXPECT_THROW(m.validate(), config_error);
}

TEST(MonoGpSampler, InputValidation) {
  const Matrix x = Vector::LinSpaced(5, 0.0, 1.0);
  EXPECT_THROW(MonoGpSampler(x, Vector::Zero(4), {}, {}), length_mismatch);
  Vector bad = Vector::Ones(5);
  bad[2] = std::nan("");
  EXPECT_THROW(MonoGpSampler(x, bad, {}, {}), non_finite_response);
  EXPECT_THROW(MonoGpSampler(Matrix(x.array() + 0.5), Vector::LinSpaced(5, 0, 1), {}, {}), degenerate_input);
  EXPECT_THROW(MonoGpSampler(Matrix::Zero(1, 1), Vector::Zero(1), {}, {}), too_few_observations);
}

TEST(MonoGpSampler, DocumentedInitialization) {
  const LogisticData d = logistic1d(2);
  const MonoGpSampler s(d.x, d.y, {}, {});
  EXPECT_TRUE(s.z_g().isZero(0.0));
  EXPECT_EQ(s.nu(), Vector::Ones(1));
  EXPECT_EQ(s.theta(), Vector::Constant(1, 0.1));
  EXPECT_LT((s.f_n() - d.x).cwiseAbs().maxCoeff(), 1e-14);  // ramp latent = identity
}

TEST(MonoGpSampler, FlatLikelihoodAcceptsFirstProposal) {
  const LogisticData d = logistic1d(3);
  MonoGpSampler s(d.x, d.y, {}, {});
  s.set_state(s.z_g(), Vector::Zero(1), s.theta());
  Rng rng(9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(s.ess_latent_step(0, rng).shrinks, 0);
}

TEST(MonoGpSampler, ThetaAcceptanceAtZeroLatentIsDeterminantRatio) {
  const LogisticData d = logistic1d(4);
  MonoGpSampler s(d.x, d.y, {}, {});
  const PriorConfig prior;
  const Index ng = s.grid().size();
  auto logpdf0 = [&](double theta) {
    const CholFactor c = cholesky(sq_exp_cov(s.grid().as_design(), KernelParams::isotropic(theta)), model_jitter);
    return -0.5 * c.log_det() - 0.5 * static_cast<double>(ng) * std::log(2.0 * std::numbers::pi);
  };
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double current = s.theta()[0];
    Rng rng(seed), replay(seed);
    const bool accepted = s.mh_step_theta(0, rng);
    double lj = 0.0;
    const double proposal = propose_scale(current, replay, lj);
    const double log_u = std::log(replay.uniform());
    const double log_alpha = logpdf0(proposal) - logpdf0(current) +
                             log_gamma_density(proposal, prior.alpha_theta, prior.beta_theta) -
                             log_gamma_density(current, prior.alpha_theta, prior.beta_theta) + lj;
    EXPECT_EQ(accepted, log_u < log_alpha) << "seed " << seed;
    EXPECT_EQ(s.theta()[0], accepted ? proposal : current);
  }
}

TEST(MonoGpSampler, NuAcceptanceReplay) {
  const LogisticData d = logistic1d(4);
  MonoGpSampler s(d.x, d.y, {}, {});
  const PriorConfig prior;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double current = s.nu()[0];
    const double ll = s.loglik();
    Rng rng(seed), replay(seed);
    const bool accepted = s.mh_step_nu(0, rng);
    double lj = 0.0;
    const double proposal = propose_scale(current, replay, lj);
    const double log_alpha = log_marglik(d.y, s.f_n(), Vector::Constant(1, proposal)) - ll +
                             log_gamma_density(proposal, prior.alpha_nu, prior.beta_nu) -
                             log_gamma_density(current, prior.alpha_nu, prior.beta_nu) + lj;
    EXPECT_EQ(accepted, std::log(replay.uniform()) < log_alpha) << "seed " << seed;
    EXPECT_EQ(s.nu()[0], accepted ? proposal : current);
  }
}

TEST(FitMonoGp, RetainsFourHundredDraws) {
  const MonoChain& c = logistic_chain();
  EXPECT_EQ(c.draws.size(), 400u);
  EXPECT_EQ(c.loglik_trace.size(), 5000u);
  EXPECT_EQ(c.dof(), 19);
}

TEST(FitMonoGp, NuNearTruthAndThetaMixes) {
  const MonoChain& c = logistic_chain();
  std::vector<double> nu, theta;
  for (const auto& d : c.draws) {
    nu.push_back(d.nu[0]);
    theta.push_back(d.theta[0]);
  }
  double mean_nu = 0.0;
  for (double v : nu) mean_nu += v;
  mean_nu /= static_cast<double>(nu.size());
  EXPECT_GE(mean_nu, 7.0);
  EXPECT_LE(mean_nu, 13.0);
  EXPECT_LT(oracle::lag1_autocorrelation(theta), 0.9);
}

TEST(FitMonoGp, BurnInImprovesLikelihood) {
  const MonoChain& c = logistic_chain();
  double early = 0.0, late = 0.0;
  for (int t = 0; t < 50; ++t) early += c.loglik_trace[static_cast<std::size_t>(t)];
  for (int t = 4950; t < 5000; ++t) late += c.loglik_trace[static_cast<std::size_t>(t)];
  EXPECT_GE(late, early);
}

TEST(FitMonoGp, DeterministicGivenSeed) {
  const LogisticData d = logistic1d(1);
  MCMCConfig mcmc;
  mcmc.total = 300;
  mcmc.burn = 100;
  mcmc.seed = 77;
  const MonoChain a = fit_monogp(d.x, d.y, {}, mcmc);
  const MonoChain b = fit_monogp(d.x, d.y, {}, mcmc);
  ASSERT_EQ(a.draws.size(), b.draws.size());
  for (std::size_t t = 0; t < a.draws.size(); ++t) {
    EXPECT_EQ(a.draws[t].z_g, b.draws[t].z_g);
    EXPECT_EQ(a.draws[t].nu, b.draws[t].nu);
    EXPECT_EQ(a.draws[t].s2, b.draws[t].s2);
  }
}

TEST(FitMonoGp, LinearVariantRuns) {
  const LogisticData d = logistic1d(6);
  MCMCConfig mcmc;
  mcmc.total = 400;
  mcmc.burn = 100;
  mcmc.variant = MonoVariant::linear;
  const MonoChain c = fit_monogp(d.x, d.y, {}, mcmc);
  const Matrix grid = Vector::LinSpaced(50, 0.0, 1.0);
  const StudentTDraws s = predict_samples(c, grid);
  for (Index t = 0; t < s.location.cols(); ++t)
    for (Index i = 1; i < 50; ++i) EXPECT_GE(s.location(i, t), s.location(i - 1, t));
}

TEST(PredictSamples, EveryDrawMonotoneOnSortedGrid) {
  const MonoChain& c = logistic_chain();
  const StudentTDraws s = predict_samples(c, Matrix(Vector::LinSpaced(100, 0.0, 1.0)));
  ASSERT_EQ(s.location.cols(), 400);
  for (Index t = 0; t < s.location.cols(); ++t)
    for (Index i = 1; i < 100; ++i) ASSERT_GE(s.location(i, t), s.location(i - 1, t));
}

TEST(PredictSamples, ConstantLatentGivesRampLocation) {
  MonoChain c;
  c.grid = RefGrid::uniform(50);
  c.n = 10;
  c.p = 1;
  c.draws.push_back({Matrix::Constant(50, 1, 0.3), Vector::Constant(1, 4.0), Vector::Constant(1, 0.1), 2.0, 0.5});
  const StudentTDraws s = predict_samples(c, c.grid.as_design());
  for (Index i = 0; i < 50; ++i)
    EXPECT_NEAR(s.location(i, 0), 2.0 + 4.0 * (static_cast<double>(i) / 49.0 - 0.5), 1e-13);
  EXPECT_DOUBLE_EQ(s.scale2[0], 1.1 * 0.5);
}

TEST(PredictSamples, StudentVarianceIdentity) {
  MonoChain c;
  c.grid = RefGrid::uniform(50);
  c.n = 12;
  c.p = 1;
  c.draws.push_back({Matrix::Zero(50, 1), Vector::Constant(1, 1.0), Vector::Constant(1, 0.1), 0.0, 2.0});
  const StudentTDraws s = predict_samples(c, Matrix::Constant(1, 1, 0.5));
  Rng rng(123);
  const int draws = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < draws; ++t) {
    const double v = sample_predictive(s, 0, rng)[0];
    sum += v;
    sumsq += v * v;
  }
  const double var = sumsq / draws - (sum / draws) * (sum / draws);
  const double target = (1.0 + 1.0 / 12.0) * 2.0 * 11.0 / 9.0;
  EXPECT_NEAR(var, target, 0.02 * target);
  EXPECT_EQ(student_variance_factor(4), 2.0);
  EXPECT_THROW(student_variance_factor(2), dof_too_small);
}

TEST(PredictMoments, SingleDrawAndIdenticalDraws) {
  MonoChain c;
  c.grid = RefGrid::uniform(50);
  c.n = 10;
  c.p = 1;
  const MonoDraw d{Matrix::Zero(50, 1), Vector::Constant(1, 3.0), Vector::Constant(1, 0.1), 1.0, 0.4};
  c.draws.push_back(d);
  const Matrix xs = (Vector(3) << 0.1, 0.5, 0.9).finished();
  const PredictiveSummary one = predict_moments(c, xs, true);
  const double v = 0.4 * 9.0 / 7.0;
  EXPECT_NEAR(one.mean[0], 1.0 + 3.0 * (0.1 - 0.5), 1e-13);
  EXPECT_TRUE(one.cov->isApprox(v * Matrix::Identity(3, 3), 1e-13));
  c.draws.push_back(d);
  const PredictiveSummary two = predict_moments(c, xs, true);
  EXPECT_TRUE(two.cov->isApprox(v * Matrix::Identity(3, 3), 1e-13));
  EXPECT_EQ(two.dof, 9);
}

TEST(PredictMoments, AccuracyComparableToKrigingOracle) {
  const LogisticData d = logistic1d(1);
  const MonoChain& c = logistic_chain();
  const TestFunction f = make_test_function("logistic1d");
  const Matrix grid = Vector::LinSpaced(100, 0.0, 1.0);
  Vector truth(100);
  for (Index i = 0; i < 100; ++i) truth[i] = f(grid.row(i).transpose());
  const double mono = rmse(predict_moments(c, grid).mean, truth);
  const double gp = rmse(oracle::gp_kriging_oracle(d.x, d.y, grid), truth);
  EXPECT_LT(mono, 1.5 * gp) << "mono " << mono << " gp " << gp;
}

TEST(PredictMoments, CoordinatewiseMonotoneInTwoDimensions) {
  const TestFunction f = make_test_function("logistic2d");
  Rng rng(mix_seed(8));
  const Matrix x = lhs(60, 2, rng);
  const Vector y = eval_function(f, x, rng).noisy;
  MCMCConfig mcmc;
  mcmc.total = 1500;
  mcmc.burn = 500;
  const MonoChain c = fit_monogp(x, y, {}, mcmc);
  EXPECT_EQ(c.draws.front().nu.size(), 2);
  EXPECT_EQ(c.draws.front().theta.size(), 2);
  for (double fixed : {0.2, 0.7})
    for (Index axis = 0; axis < 2; ++axis) {
      Matrix line(40, 2);
      line.col(axis) = Vector::LinSpaced(40, 0.0, 1.0);
      line.col(1 - axis).setConstant(fixed);
      const StudentTDraws s = predict_samples(c, line);
      for (Index t = 0; t < s.location.cols(); ++t)
        for (Index i = 1; i < 40; ++i) ASSERT_GE(s.location(i, t), s.location(i - 1, t));
    }
}

TEST(LatentContributions, SumsToCenteredMean) {
  const MonoChain& c = logistic_chain();
  const Matrix grid = Vector::LinSpaced(11, 0.0, 1.0);
  const Matrix contrib = latent_contributions(c, grid);
  double mu = 0.0, nu = 0.0;
  for (const auto& d : c.draws) {
    mu += d.mu_hat;
    nu += d.nu[0];
  }
  mu /= 400.0;
  nu /= 400.0;
  const Vector mean = predict_moments(c, grid).mean;
  EXPECT_LT((mean - (contrib.col(0).array() + mu - 0.5 * nu).matrix()).cwiseAbs().maxCoeff(), 1e-10);
}
