#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace triangle_opt {

using Vector = Eigen::VectorXd;

/// Primal norm and its dual.
struct NormPair {
  enum class Kind { euclidean, l1_linf };

  Kind kind = Kind::euclidean;

  static NormPair euclidean() { return {Kind::euclidean}; }
  static NormPair l1_linf() { return {Kind::l1_linf}; }

  double primal(const Vector& x) const {
    return kind == Kind::euclidean ? x.norm() : x.lpNorm<1>();
  }
  double dual(const Vector& g) const {
    return kind == Kind::euclidean ? g.norm() : g.lpNorm<Eigen::Infinity>();
  }
  double primal_sq(const Vector& x) const {
    const double n = primal(x);
    return n * n;
  }
};

/// Euclidean projection onto the probability simplex (sort based).
inline Vector project_onto_simplex(const Vector& z) {
  const Eigen::Index n = z.size();
  std::vector<double> sorted(z.data(), z.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  return (z.array() - theta).max(0.0).matrix();
}

/// The feasible set Q.
struct FeasibleSet {
  enum class Kind { free_space, box, simplex, euclidean_ball };

  Kind kind = Kind::free_space;
  Vector lower;        // box
  Vector upper;        // box
  Vector ball_center;  // euclidean_ball
  double radius = 0.0;

  static FeasibleSet free_space() { return {}; }

  static FeasibleSet box(Vector lo, Vector hi) {
    if (lo.size() != hi.size()) throw ConfigError("box bounds have different sizes");
    if ((lo.array() > hi.array()).any()) throw ConfigError("box lower bound exceeds upper bound");
    FeasibleSet s;
    s.kind = Kind::box;
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    return s;
  }

  static FeasibleSet simplex() {
    FeasibleSet s;
    s.kind = Kind::simplex;
    return s;
  }

  static FeasibleSet ball(Vector center, double r) {
    if (!(r > 0.0)) throw ConfigError("ball radius must be positive");
    FeasibleSet s;
    s.kind = Kind::euclidean_ball;
    s.ball_center = std::move(center);
    s.radius = r;
    return s;
  }

  std::string name() const {
    switch (kind) {
      case Kind::free_space: return "free";
      case Kind::box: return "box";
      case Kind::simplex: return "simplex";
      case Kind::euclidean_ball: return "ball";
    }
    return "?";
  }

  bool contains(const Vector& x, double tol = 1e-9) const {
    switch (kind) {
      case Kind::free_space: return x.allFinite();
      case Kind::box:
        return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
      case Kind::simplex:
        return (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= tol * std::max<double>(1.0, x.size());
      case Kind::euclidean_ball: return (x - ball_center).norm() <= radius * (1.0 + tol) + tol;
    }
    return false;
  }

  /// Nearest point of the set in the euclidean norm.
  Vector project(const Vector& z) const {
    switch (kind) {
      case Kind::free_space: return z;
      case Kind::box: return z.cwiseMax(lower).cwiseMin(upper);
      case Kind::simplex: return project_onto_simplex(z);
      case Kind::euclidean_ball: {
        const Vector offset = z - ball_center;
        const double r = offset.norm();
        if (r <= radius) return z;
        return ball_center + (radius / r) * offset;
      }
    }
    return z;
  }

  /// A random point of the set; free space draws a standard gaussian point.
  Vector sample(CounterRng& rng, Eigen::Index n) const {
    switch (kind) {
      case Kind::free_space: return rng.normal_vector(n);
      case Kind::box: {
        Vector x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          // Occasionally pin a coordinate to a face so boundary cases get probed.
          const double u = rng.uniform();
          if (u < 0.1) x[i] = lower[i];
          else if (u < 0.2) x[i] = upper[i];
          else x[i] = rng.uniform(lower[i], upper[i]);
        }
        return x;
      }
      case Kind::simplex: {
        // Exponential spacings give a uniform point; raising them to a power
        // concentrates mass near vertices for a share of the samples.
        const double power = rng.uniform() < 0.5 ? 1.0 : 4.0;
        Vector x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double u = rng.uniform() + 0x1.0p-54;
          x[i] = std::pow(-std::log(u), power) + 1e-300;
        }
        return x / x.sum();
      }
      case Kind::euclidean_ball: {
        Vector dir = rng.normal_vector(n);
        dir /= dir.norm();
        const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
        return ball_center + r * dir;
      }
    }
    return Vector::Zero(n);
  }

  bool same_as(const FeasibleSet& other) const {
    if (kind != other.kind) return false;
    switch (kind) {
      case Kind::free_space:
      case Kind::simplex: return true;
      case Kind::box:
        return lower.size() == other.lower.size() && lower == other.lower && upper == other.upper;
      case Kind::euclidean_ball:
        return radius == other.radius && ball_center.size() == other.ball_center.size() &&
               ball_center == other.ball_center;
    }
    return false;
  }
};

/// Prox-function d with center y0, its norm pair and the feasible set.
///
/// Two geometries are implemented:
///   euclidean: d(x) = 1/2 ||x - center||_2^2 on any FeasibleSet, norm l2.
///   entropy:   d(x) = sum x_i ln x_i + ln n on the simplex, center uniform, norm l1.
/// Both are 1-strongly convex in their norm and vanish at the center.
class ProxSetup {
 public:
  enum class Kind { euclidean, entropy };

  static ProxSetup euclidean(Vector center, FeasibleSet set = FeasibleSet::free_space()) {
    if (!set.contains(center)) throw DomainError("prox center is not feasible");
    ProxSetup s;
    s.kind_ = Kind::euclidean;
    s.norms_ = NormPair::euclidean();
    s.center_ = std::move(center);
    s.set_ = std::move(set);
    return s;
  }

  static ProxSetup entropy_simplex(Eigen::Index n) {
    if (n < 1) throw ConfigError("entropy setup needs dimension >= 1");
    ProxSetup s;
    s.kind_ = Kind::entropy;
    s.norms_ = NormPair::l1_linf();
    s.center_ = Vector::Constant(n, 1.0 / static_cast<double>(n));
    s.set_ = FeasibleSet::simplex();
    return s;
  }

  /// Copy with the geometry constants replaced (both must be >= 1).
  ProxSetup with_omegas(double omega_tilde, double omega) const {
    if (!(omega_tilde >= 1.0) || !(omega >= 1.0)) throw ConfigError("omega constants must be >= 1");
    ProxSetup s = *this;
    s.omega_tilde_ = omega_tilde;
    s.omega_ = omega;
    return s;
  }

  Kind kind() const { return kind_; }
  const NormPair& norms() const { return norms_; }
  const Vector& center() const { return center_; }
  const FeasibleSet& feasible_set() const { return set_; }
  double omega_tilde() const { return omega_tilde_; }
  double omega() const { return omega_; }
  Eigen::Index dimension() const { return center_.size(); }

  double d_value(const Vector& x) const {
    if (kind_ == Kind::euclidean) return 0.5 * (x - center_).squaredNorm();
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < 0.0) throw DomainError("entropy prox-function evaluated at a negative coordinate");
      s += x[i] * std::log(std::max(x[i], kLogFloor));
    }
    return s + std::log(static_cast<double>(x.size()));
  }

  Vector d_grad(const Vector& x) const {
    if (kind_ == Kind::euclidean) return x - center_;
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = std::log(std::max(x[i], kLogFloor)) + 1.0;
    return g;
  }

  static constexpr double kLogFloor = 1e-300;

 private:
  ProxSetup() = default;

  Kind kind_ = Kind::euclidean;
  NormPair norms_;
  Vector center_;
  FeasibleSet set_;
  double omega_tilde_ = 1.0;
  double omega_ = 1.0;
};

/// The simple (prox-friendly) part h of the objective.
struct HTerm {
  enum class Kind { zero, l1, indicator };

  Kind kind = Kind::zero;
  double lambda = 0.0;
  FeasibleSet set;

  static HTerm zero() { return {}; }
  static HTerm l1(double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("l1 weight must be nonnegative");
    return {Kind::l1, lambda, {}};
  }
  static HTerm indicator(FeasibleSet s) { return {Kind::indicator, 0.0, std::move(s)}; }

  double value(const Vector& x) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::l1: return lambda * x.lpNorm<1>();
      case Kind::indicator:
        return set.contains(x) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::zero: return "zero";
      case Kind::l1: return "l1";
      case Kind::indicator: return "indicator";
    }
    return "?";
  }
};

/// phi(x) = d_scale * d(x) + <linear, x> + h_scale * h(x) + constant.
///
/// Every Bregman term V(x, y) = d(x) - d(y) - <grad d(y), x - y> splits into a
/// multiple of d, a linear part and a constant, so the recursively defined
/// estimate sequence collapses into these four numbers.
struct EstimateFunction {
  double d_scale = 1.0;
  Vector linear;
  double h_scale = 0.0;
  double constant = 0.0;

  double evaluate(const ProxSetup& setup, const HTerm& h, const Vector& x) const {
    const double h_part = h_scale == 0.0 ? 0.0 : h_scale * h.value(x);
    return d_scale * setup.d_value(x) + linear.dot(x) + h_part + constant;
  }

  /// Sum of the absolute values of the four terms at x; the natural scale for
  /// rounding error in evaluate().
  double magnitude(const ProxSetup& setup, const HTerm& h, const Vector& x) const {
    const double h_part = h_scale == 0.0 ? 0.0 : std::abs(h_scale * h.value(x));
    return std::abs(d_scale * setup.d_value(x)) + std::abs(linear.dot(x)) + h_part + std::abs(constant);
  }
};

/// phi_0 before any gradient term: V(x, y0) in canonical form.
inline EstimateFunction initial_estimate(const ProxSetup& setup) {
  const Vector& c = setup.center();
  const Vector gc = setup.d_grad(c);
  EstimateFunction phi;
  phi.d_scale = 1.0;
  phi.linear = -gc;
  phi.h_scale = 0.0;
  phi.constant = -setup.d_value(c) + gc.dot(c);
  return phi;
}

/// V(x, z) = d(x) - d(z) - <grad d(z), x - z>.
inline double bregman_divergence(const ProxSetup& setup, const Vector& x, const Vector& z) {
  if (x.size() != z.size() || x.size() != setup.dimension())
    throw DomainError("bregman_divergence: dimension mismatch");
  if (setup.kind() == ProxSetup::Kind::euclidean) return 0.5 * (x - z).squaredNorm();
  double v = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(z[i] > 0.0)) throw DomainError("entropy divergence undefined: z has a nonpositive coordinate");
    if (x[i] < 0.0) throw DomainError("entropy divergence undefined: x has a negative coordinate");
    if (x[i] > 0.0) v += x[i] * std::log(x[i] / z[i]);
    v += z[i] - x[i];
  }
  return std::max(0.0, v);
}

/// Largest 1/2||x - z||^2 - V(x, z) over random feasible pairs (<= 0 when d is
/// 1-strongly convex). Returns 0 for n_pairs = 0.
inline double strong_convexity_probe(const ProxSetup& setup, std::uint64_t rng_seed, int n_pairs) {
  if (n_pairs <= 0) return 0.0;
  CounterRng rng(rng_seed, 0x5C0BE);
  const Eigen::Index n = setup.dimension();
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_pairs; ++i) {
    Vector x = setup.feasible_set().sample(rng, n);
    Vector z = setup.feasible_set().sample(rng, n);
    if (i % 4 == 0) z = x + 1e-3 * (z - x);  // nearby pairs
    const double gap = 0.5 * setup.norms().primal_sq(x - z) - bregman_divergence(setup, x, z);
    worst = std::max(worst, gap);
  }
  return worst;
}

namespace detail {

inline Vector soft_threshold(const Vector& z, double tau) {
  return (z.array().sign() * (z.array().abs() - tau).max(0.0)).matrix();
}

inline Vector stable_softmax(const Vector& logits) {
  const double top = logits.maxCoeff();
  Vector w = (logits.array() - top).exp().matrix();
  return w / w.sum();
}

}  // namespace detail

/// argmin_{x in Q} d_scale * d(x) + <linear, x> + h_scale * h(x), in closed form.
///
/// Supported combinations:
///   euclidean / free space : h zero or l1 (soft thresholding).
///   euclidean / box        : h zero or l1 (separable: threshold then clip).
///   euclidean / ball       : h zero or indicator.
///   euclidean / simplex    : h zero, l1 (constant on the simplex) or indicator.
///   entropy / simplex      : same h kinds, softmax solution.
/// An indicator h must describe the setup's set, or free space may be narrowed
/// to the indicator's set.
inline Vector composite_prox_solve(const ProxSetup& setup, const EstimateFunction& phi, const HTerm& h) {
  if (!(phi.d_scale > 0.0)) throw DomainError("composite_prox_solve: d_scale must be positive");
  if (phi.linear.size() != setup.dimension()) throw DomainError("composite_prox_solve: dimension mismatch");

  FeasibleSet set = setup.feasible_set();
  HTerm::Kind hk = h.kind;
  if (hk == HTerm::Kind::indicator) {
    if (set.kind == FeasibleSet::Kind::free_space && setup.kind() == ProxSetup::Kind::euclidean) {
      set = h.set;
    } else if (!set.same_as(h.set) && h.set.kind != FeasibleSet::Kind::free_space) {
      throw UnsupportedGeometry("indicator set differs from the prox setup's feasible set");
    }
    hk = HTerm::Kind::zero;
  }
  if (hk == HTerm::Kind::l1 && set.kind == FeasibleSet::Kind::simplex) {
    // ||x||_1 = 1 on the simplex, so the term is a constant.
    hk = HTerm::Kind::zero;
  }
  const double tau = hk == HTerm::Kind::l1 ? phi.h_scale * h.lambda / phi.d_scale : 0.0;

  if (setup.kind() == ProxSetup::Kind::entropy) {
    if (hk != HTerm::Kind::zero) throw UnsupportedGeometry("entropy prox supports only constant h");
    return detail::stable_softmax(-phi.linear / phi.d_scale);
  }

  const Vector z = setup.center() - phi.linear / phi.d_scale;
  switch (set.kind) {
    case FeasibleSet::Kind::free_space:
      return hk == HTerm::Kind::l1 ? detail::soft_threshold(z, tau) : z;
    case FeasibleSet::Kind::box:
      return (hk == HTerm::Kind::l1 ? detail::soft_threshold(z, tau) : z).cwiseMax(set.lower).cwiseMin(set.upper);
    case FeasibleSet::Kind::euclidean_ball:
      if (hk == HTerm::Kind::l1 && tau > 0.0)
        throw UnsupportedGeometry("euclidean ball with an l1 term has no closed-form prox");
      return set.project(z);
    case FeasibleSet::Kind::simplex: return project_onto_simplex(z);
  }
  throw UnsupportedGeometry("unknown feasible set");
}

/// Re-centered euclidean prox-function d(x) = 1/2||x - new_center||^2.
/// Only free space is translation invariant, so anything else is refused.
inline ProxSetup recenter(const ProxSetup& setup, const Vector& new_center) {
  if (setup.kind() != ProxSetup::Kind::euclidean)
    throw UnsupportedGeometry("recenter: a translated simplex is not the simplex");
  if (setup.feasible_set().kind != FeasibleSet::Kind::free_space)
    throw UnsupportedGeometry("recenter: feasible set is not translation invariant");
  if (new_center.size() != setup.dimension()) throw DomainError("recenter: dimension mismatch");
  return ProxSetup::euclidean(new_center, setup.feasible_set()).with_omegas(setup.omega_tilde(), setup.omega());
}

}  // namespace triangle_opt
