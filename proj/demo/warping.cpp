// Fits the monotone-warped deep GP to the cross-in-tray surface and prints the
// posterior mean warping of each input on a grid.
#include <cstdio>

#include "monowarp/bench.hpp"
#include "monowarp/dgp.hpp"

using namespace monowarp;

int main() {
  const TestFunction f = make_test_function("cross-in-tray");
  Rng rng(mix_seed(3));
  const Matrix x = lhs(40, 2, rng);
  const Evaluation train = eval_function(f, x, rng);

  MCMCConfig mcmc = dgp_default_mcmc();
  mcmc.total = 3000;
  mcmc.seed = 11;
  const DgpChain chain = fit_mwdgp(x, train.noisy, DgpPriors{}, mcmc);

  const Vector u = Vector::LinSpaced(11, 0.0, 1.0);
  Matrix mean_warp = Matrix::Zero(u.size(), 2);
  for (const auto& d : chain.draws) mean_warp += warp_inputs(chain, d, u.replicate(1, 2)).query;
  mean_warp /= static_cast<double>(chain.draws.size());
  std::printf("%6s %9s %9s\n", "u", "w1(u)", "w2(u)");
  for (Index i = 0; i < u.size(); ++i)
    std::printf("%6.2f %9.4f %9.4f\n", u[i], mean_warp(i, 0), mean_warp(i, 1));
}
