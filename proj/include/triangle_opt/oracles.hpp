#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "prox_geometry.hpp"
#include "rng.hpp"

namespace triangle_opt {

/// Known regularity of the smooth part. Any field may be absent.
struct SmoothnessMeta {
  std::optional<double> L;     // Lipschitz constant of the gradient
  std::optional<double> L_nu;  // Hoelder constant for exponent nu
  std::optional<double> nu;
  double mu = 0.0;             // strong convexity of f
};

struct KnownOptimum {
  Vector x;
  double F = 0.0;
};

/// F(x) = f(x) + h(x) with oracle access to f and its gradient.
struct CompositeObjective {
  std::function<double(const Vector&)> smooth_value;
  std::function<Vector(const Vector&)> smooth_grad;
  HTerm h;
  std::optional<KnownOptimum> known_optimum;
  SmoothnessMeta smoothness;

  /// Full objective without touching any counter (instrumentation only).
  double F(const Vector& x) const { return smooth_value(x) + h.value(x); }
};

struct EvalCounter {
  std::int64_t f_calls = 0;
  std::int64_t grad_calls = 0;
  std::int64_t stochastic_grad_calls = 0;

  friend bool operator==(const EvalCounter&, const EvalCounter&) = default;
};

inline double value(const CompositeObjective& obj, const Vector& x, EvalCounter& counter) {
  ++counter.f_calls;
  const double v = obj.smooth_value(x);
  if (std::isnan(v)) throw DomainError("smooth value is undefined at the query point");
  return v;
}

inline Vector grad(const CompositeObjective& obj, const Vector& x, EvalCounter& counter) {
  ++counter.grad_calls;
  Vector g = obj.smooth_grad(x);
  if (g.size() != x.size() || g.hasNaN()) throw DomainError("smooth gradient is undefined at the query point");
  return g;
}

/// Noise attached to the gradient oracle.
struct NoiseModel {
  enum class Kind { none, gaussian, finite_sum };

  Kind kind = Kind::none;
  /// Variance bound E||g(x, xi) - grad f(x)||^2 <= D.
  std::optional<double> D;
  /// finite_sum: component gradients whose plain average is grad f.
  std::vector<std::function<Vector(const Vector&)>> components;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(std::optional<double> D) { return {Kind::gaussian, D, {}}; }
  static NoiseModel finite_sum(std::vector<std::function<Vector(const Vector&)>> parts, std::optional<double> D) {
    if (parts.empty()) throw ConfigError("finite_sum noise model needs at least one component");
    return {Kind::finite_sum, D, std::move(parts)};
  }

  std::string name() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::gaussian: return "gaussian";
      case Kind::finite_sum: return "finite_sum";
    }
    return "?";
  }
};

/// Unbiased stochastic gradients of `base` with variance at most D.
///
/// The gaussian model adds i.i.d. coordinates of variance D/n, so that
/// E||noise||_2^2 = D exactly.
struct StochasticGradientOracle {
  CompositeObjective base;
  NoiseModel noise;

  double variance_bound() const {
    if (noise.kind == NoiseModel::Kind::none) return noise.D.value_or(0.0);
    if (!noise.D) throw ConfigError("variance bound D is not configured for the " + noise.name() + " noise model");
    return *noise.D;
  }
};

inline Vector sample_gradient(const StochasticGradientOracle& oracle, const Vector& x, CounterRng& rng,
                              EvalCounter& counter) {
  ++counter.stochastic_grad_calls;
  switch (oracle.noise.kind) {
    case NoiseModel::Kind::none: return oracle.base.smooth_grad(x);
    case NoiseModel::Kind::gaussian: {
      const double D = oracle.variance_bound();
      const Vector g = oracle.base.smooth_grad(x);
      if (D == 0.0) return g;
      const double sigma = std::sqrt(D / static_cast<double>(x.size()));
      return g + sigma * rng.normal_vector(x.size());
    }
    case NoiseModel::Kind::finite_sum: {
      const auto& parts = oracle.noise.components;
      return parts[rng.index(parts.size())](x);
    }
  }
  throw ConfigError("unknown noise model");
}

/// Mean of m independent draws, summed left to right in draw order.
inline Vector minibatch_gradient(const StochasticGradientOracle& oracle, const Vector& x, std::int64_t m,
                                 CounterRng& rng, EvalCounter& counter) {
  if (m < 1) throw ConfigError("mini-batch size must be >= 1");
  counter.stochastic_grad_calls += m;
  const auto mean = static_cast<double>(m);
  switch (oracle.noise.kind) {
    case NoiseModel::Kind::none:
      // Every draw equals the exact gradient.
      return oracle.base.smooth_grad(x);
    case NoiseModel::Kind::gaussian: {
      const double D = oracle.variance_bound();
      const Vector g = oracle.base.smooth_grad(x);
      if (D == 0.0) return g;
      const double sigma = std::sqrt(D / static_cast<double>(x.size()));
      Vector sum = Vector::Zero(x.size());
      for (std::int64_t i = 0; i < m; ++i) sum += rng.normal_vector(x.size());
      return g + sigma * (sum / mean);
    }
    case NoiseModel::Kind::finite_sum: {
      const auto& parts = oracle.noise.components;
      Vector sum = Vector::Zero(x.size());
      for (std::int64_t i = 0; i < m; ++i) sum += parts[rng.index(parts.size())](x);
      return sum / mean;
    }
  }
  throw ConfigError("unknown noise model");
}

/// Central differences of the smooth part; does not touch any counter.
inline Vector finite_difference_gradient(const CompositeObjective& obj, const Vector& x, double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = obj.smooth_value(probe);
    probe[i] = x[i] - step;
    const double down = obj.smooth_value(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

struct HolderEstimate {
  std::vector<double> nu;
  std::vector<double> L_nu;  // lower estimates, one per nu
};

inline std::vector<double> default_nu_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
  return grid;
}

/// max over sampled pairs of ||grad f(y) - grad f(x)||_* / ||y - x||^nu for each nu.
///
/// x is drawn from the ball of the given radius around `origin`; y = x + t*dir
/// with t log-uniform in [1e-3, 1] * radius so that short pairs are present.
inline HolderEstimate holder_probe(const CompositeObjective& obj, int n_pairs, CounterRng& rng,
                                   const Vector& origin, double radius = 1.0,
                                   std::vector<double> nu_grid = default_nu_grid(),
                                   NormPair norms = NormPair::euclidean()) {
  HolderEstimate est{std::move(nu_grid), {}};
  est.L_nu.assign(est.nu.size(), 0.0);
  const Eigen::Index n = origin.size();
  const FeasibleSet ball = FeasibleSet::ball(origin, radius);
  for (int p = 0; p < n_pairs; ++p) {
    const Vector x = ball.sample(rng, n);
    Vector dir = rng.normal_vector(n);
    dir /= dir.norm();
    const double t = radius * std::pow(10.0, -3.0 * rng.uniform());
    const Vector y = x + t * dir;
    const double num = norms.dual(obj.smooth_grad(y) - obj.smooth_grad(x));
    const double dist = norms.primal(y - x);
    if (!(dist > 0.0)) continue;
    for (std::size_t i = 0; i < est.nu.size(); ++i)
      est.L_nu[i] = std::max(est.L_nu[i], num / std::pow(dist, est.nu[i]));
  }
  return est;
}

}  // namespace triangle_opt
