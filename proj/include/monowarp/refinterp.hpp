#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace monowarp {

/// Ordered 1-d reference grid on which the latent Gaussian process lives.
class RefGrid {
 public:
  explicit RefGrid(Vector x) : x_(std::move(x)) {
    if (x_.size() < 2) throw empty_grid("reference grid needs at least 2 nodes");
    for (Index i = 1; i < x_.size(); ++i)
      if (!(x_[i] > x_[i - 1])) throw degenerate_input("reference grid must be strictly increasing");
  }

  /// n_g evenly spaced nodes on [0, 1].
  static RefGrid uniform(Index n_g = 50) {
    if (n_g < 2) throw empty_grid("reference grid needs at least 2 nodes");
    return RefGrid(Vector::LinSpaced(n_g, 0.0, 1.0));
  }

  const Vector& nodes() const { return x_; }
  Index size() const { return x_.size(); }
  /// Nodes as an n_g x 1 design matrix for the kernel builders.
  Matrix as_design() const { return x_; }

 private:
  Vector x_;
};

enum class MonoVariant { exp, linear };

inline const char* to_string(MonoVariant v) { return v == MonoVariant::exp ? "exp" : "linear"; }
inline MonoVariant mono_variant_from_string(const std::string& s) {
  if (s == "exp") return MonoVariant::exp;
  if (s == "linear") return MonoVariant::linear;
  throw config_error("variant must be 'exp' or 'linear', got '" + s + "'");
}

/// Precomputed query-to-segment mapping ("fixed order" interpolation). Query q
/// in segment k with weight w evaluates to (1 - w) * f[k] + w * f[k + 1];
/// queries outside the grid reuse the boundary segment, so w may leave [0, 1].
struct InterpPlan {
  Index grid_size = 0;
  std::vector<Index> segment_index;
  std::vector<double> weight;

  Index query_count() const { return static_cast<Index>(segment_index.size()); }
};

template <typename Queries>
InterpPlan fo_approx_init(const RefGrid& grid, const Queries& queries) {
  const Vector& xg = grid.nodes();
  const Index ng = xg.size();
  InterpPlan plan;
  plan.grid_size = ng;
  const Index nq = static_cast<Index>(queries.size());
  plan.segment_index.resize(static_cast<std::size_t>(nq));
  plan.weight.resize(static_cast<std::size_t>(nq));
  const double* first = xg.data();
  for (Index q = 0; q < nq; ++q) {
    const double v = queries[q];
    // upper_bound puts exact node hits at the left end of their segment.
    Index k = static_cast<Index>(std::upper_bound(first, first + ng, v) - first) - 1;
    k = std::clamp<Index>(k, 0, ng - 2);
    plan.segment_index[static_cast<std::size_t>(q)] = k;
    plan.weight[static_cast<std::size_t>(q)] = (v - xg[k]) / (xg[k + 1] - xg[k]);
  }
  return plan;
}

template <typename Values>
Vector fo_approx(const InterpPlan& plan, const Values& f_g) {
  if (static_cast<Index>(f_g.size()) != plan.grid_size)
    throw length_mismatch("fo_approx: plan built for " + std::to_string(plan.grid_size) +
                          " nodes, got " + std::to_string(f_g.size()));
  Vector out(plan.query_count());
  for (Index q = 0; q < out.size(); ++q) {
    const auto s = static_cast<std::size_t>(q);
    const Index k = plan.segment_index[s];
    const double w = plan.weight[s];
    const double a = f_g[k], b = f_g[k + 1];
    // monotone in w after rounding
    const double v = a + w * (b - a);
    out[q] = (w >= 0.0 && w <= 1.0) ? std::clamp(v, std::min(a, b), std::max(a, b)) : v;
  }
  return out;
}

namespace detail {
inline Vector cumsum_normalize(const Vector& positive) {
  Vector c(positive.size());
  double acc = 0.0;
  for (Index i = 0; i < c.size(); ++i) c[i] = acc += positive[i];
  const double lo = c.minCoeff();
  const double range = c.maxCoeff() - lo;
  return (c.array() - lo) / range;
}
}  // namespace detail

/// exp -> cumulative sum -> rescale to [0, 1]. Strictly increasing with
/// endpoints exactly 0 and 1.
template <typename Z>
Vector mono_transform(const Z& z_g) {
  if (z_g.size() < 2) throw empty_grid("mono_transform needs at least 2 values");
  return detail::cumsum_normalize(Vector(z_g).array().exp().matrix());
}

/// Shift-by-minimum variant; nondecreasing, and undefined for constant input.
template <typename Z>
Vector mono_transform_linear(const Z& z_g) {
  if (z_g.size() < 2) throw empty_grid("mono_transform_linear needs at least 2 values");
  const Vector z = z_g;
  const Vector shifted = (z.array() - z.minCoeff()).matrix();
  // cumulative sums are nondecreasing: range = total - first increment
  if (shifted.sum() - shifted[0] < 1e-12)
    throw degenerate_input("mono_transform_linear: constant latent vector");
  return detail::cumsum_normalize(shifted);
}

template <typename Z>
Vector mono_transform(const Z& z_g, MonoVariant variant) {
  return variant == MonoVariant::exp ? mono_transform(z_g) : mono_transform_linear(z_g);
}

/// Interpolated monotone image of z_g at the plan's queries.
template <typename Z>
Vector monoref(const InterpPlan& plan, const Z& z_g, MonoVariant variant = MonoVariant::exp) {
  return fo_approx(plan, mono_transform(z_g, variant));
}

template <typename Queries, typename Z>
Vector monoref(const Queries& queries, const RefGrid& grid, const Z& z_g,
               MonoVariant variant = MonoVariant::exp) {
  return monoref(fo_approx_init(grid, queries), z_g, variant);
}

}  // namespace monowarp
