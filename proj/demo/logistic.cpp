// Fits the monotone GP to noisy 1-d logistic data and prints the posterior
// predictive on a coarse grid next to the truth.
#include <cstdio>

#include "monowarp/bench.hpp"
#include "monowarp/monogp.hpp"

using namespace monowarp;

int main() {
  const TestFunction f = make_test_function("logistic1d");
  Rng rng(mix_seed(42));
  const Matrix x = lhs(20, 1, rng);
  const Evaluation train = eval_function(f, x, rng);

  MCMCConfig mcmc;
  mcmc.seed = 7;
  const MonoChain chain = fit_monogp(x, train.noisy, PriorConfig{}, mcmc);

  const Matrix grid = Vector::LinSpaced(11, 0.0, 1.0);
  const PredictiveSummary pred = predict_moments(chain, grid);
  const auto [lo, hi] = predictive_interval(pred, 0.90);
  std::printf("%6s %9s %9s %9s %9s\n", "x", "truth", "mean", "lo90", "hi90");
  for (Index i = 0; i < grid.rows(); ++i)
    std::printf("%6.2f %9.4f %9.4f %9.4f %9.4f\n", grid(i, 0), f(grid.row(i).transpose()),
                pred.mean[i], lo[i], hi[i]);
  std::printf("retained draws: %zu, student-t dof: %d\n", chain.draws.size(), pred.dof);
}
