#pragma once

// Slow reference solvers for the composite prox problem
//   min_{x in Q}  c_d d(x) + <g, x> + c_h h(x).
// Written independently of the library's closed forms (no shared helpers).

#include <algorithm>
#include <cmath>
#include <vector>

#include "triangle_opt/prox_geometry.hpp"

namespace oracle {

using triangle_opt::EstimateFunction;
using triangle_opt::FeasibleSet;
using triangle_opt::HTerm;
using triangle_opt::ProxSetup;
using triangle_opt::Vector;

inline FeasibleSet effective_set(const ProxSetup& setup, const HTerm& h) {
  if (h.kind == HTerm::Kind::indicator && setup.feasible_set().kind == FeasibleSet::Kind::free_space)
    return h.set;
  return setup.feasible_set();
}

inline double lambda_of(const HTerm& h) { return h.kind == HTerm::Kind::l1 ? h.lambda : 0.0; }

/// Objective value the oracle minimizes.
inline double objective(const ProxSetup& setup, const EstimateFunction& phi, const HTerm& h, const Vector& x) {
  const Eigen::Index n = x.size();
  double d = 0.0;
  if (setup.kind() == ProxSetup::Kind::euclidean) {
    for (Eigen::Index i = 0; i < n; ++i) d += 0.5 * (x[i] - setup.center()[i]) * (x[i] - setup.center()[i]);
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      if (x[i] > 0.0) d += x[i] * std::log(x[i]);
    d += std::log(static_cast<double>(n));
  }
  double lin = 0.0, l1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    lin += phi.linear[i] * x[i];
    l1 += std::abs(x[i]);
  }
  return phi.d_scale * d + lin + phi.h_scale * lambda_of(h) * l1;
}

/// Euclidean projection onto the simplex by bisection on the threshold.
inline Vector simplex_projection_bisect(const Vector& z) {
  double lo = z.minCoeff() - 1.0, hi = z.maxCoeff();
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += std::max(0.0, z[i] - mid);
    if (s > 1.0) lo = mid;
    else hi = mid;
  }
  const double theta = 0.5 * (lo + hi);
  Vector x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) x[i] = std::max(0.0, z[i] - theta);
  return x / x.sum();
}

inline Vector project(const FeasibleSet& set, const Vector& z) {
  switch (set.kind) {
    case FeasibleSet::Kind::free_space: return z;
    case FeasibleSet::Kind::box: {
      Vector x = z;
      for (Eigen::Index i = 0; i < z.size(); ++i) x[i] = std::min(std::max(z[i], set.lower[i]), set.upper[i]);
      return x;
    }
    case FeasibleSet::Kind::euclidean_ball: {
      const double r = (z - set.ball_center).norm();
      if (r <= set.radius) return z;
      return set.ball_center + (z - set.ball_center) * (set.radius / r);
    }
    case FeasibleSet::Kind::simplex: return simplex_projection_bisect(z);
  }
  return z;
}

/// Zooming grid search in dimension <= 3: 11 points per axis, re-centered on the
/// best point with a +-3 cell window each level. Grid points are mapped onto Q
/// by projection, so Q's boundary is reachable.
inline Vector grid_search(const ProxSetup& setup, const EstimateFunction& phi, const HTerm& h, int levels = 40) {
  const FeasibleSet set = effective_set(setup, h);
  const int n = static_cast<int>(setup.dimension());
  const double reach = (phi.linear.lpNorm<Eigen::Infinity>() + phi.h_scale * lambda_of(h)) / phi.d_scale + 1.0;
  Vector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    switch (set.kind) {
      case FeasibleSet::Kind::box:
        lo[i] = set.lower[i];
        hi[i] = set.upper[i];
        break;
      case FeasibleSet::Kind::simplex:
        lo[i] = 0.0;
        hi[i] = 1.0;
        break;
      case FeasibleSet::Kind::euclidean_ball:
        lo[i] = set.ball_center[i] - set.radius;
        hi[i] = set.ball_center[i] + set.radius;
        break;
      case FeasibleSet::Kind::free_space:
        lo[i] = setup.center()[i] - reach;
        hi[i] = setup.center()[i] + reach;
        break;
    }
  }
  Vector best = project(set, 0.5 * (lo + hi));
  double best_val = objective(setup, phi, h, best);
  Vector probe_center = 0.5 * (lo + hi);
  Vector width = hi - lo;
  const int pts = 11;
  for (int level = 0; level < levels; ++level) {
    const Vector cell = width / (pts - 1);
    std::vector<int> idx(n, 0);
    for (;;) {
      Vector p(n);
      for (int i = 0; i < n; ++i) p[i] = probe_center[i] - 0.5 * width[i] + cell[i] * idx[i];
      const Vector q = project(set, p);
      const double v = objective(setup, phi, h, q);
      if (v < best_val) {
        best_val = v;
        best = q;
      }
      int d = 0;
      while (d < n && ++idx[d] == pts) idx[d++] = 0;
      if (d == n) break;
    }
    probe_center = best;
    width = 6.0 * cell;
  }
  return best;
}

/// Long projected subgradient run with geometric step decay from 1/c_d to 1e-12 / c_d.
inline Vector projected_subgradient(const ProxSetup& setup, const EstimateFunction& phi, const HTerm& h,
                                    int steps = 100000) {
  const FeasibleSet set = effective_set(setup, h);
  const Eigen::Index n = setup.dimension();
  const double tau = phi.h_scale * lambda_of(h);
  const double ratio = std::pow(1e-12, 1.0 / steps);
  double eta = 1.0 / phi.d_scale;
  Vector x = project(set, setup.center());
  Vector g(n);
  int still = 0;
  for (int s = 0; s < steps; ++s, eta *= ratio) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sgn = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
      g[i] = phi.d_scale * (x[i] - setup.center()[i]) + phi.linear[i] + tau * sgn;
    }
    const Vector next = project(set, x - eta * g);
    // Smooth problems reach a fixed point quickly.
    still = (next - x).lpNorm<Eigen::Infinity>() == 0.0 ? still + 1 : 0;
    x = next;
    if (still > 50) break;
  }
  return x;
}

/// Pairwise mass exchange for the entropy prox: each pair (i, j) is solved by
/// bisection on the transferred mass.
inline Vector entropy_pairwise(const ProxSetup& setup, const EstimateFunction& phi, int sweeps = 400) {
  const Eigen::Index n = setup.dimension();
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const double c = phi.d_scale;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const Vector before = x;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double s = x[i] + x[j];
        if (!(s > 0.0)) continue;
        // minimize c (a ln a + b ln b) + g_i a + g_j b over a + b = s; derivative in a is monotone.
        double lo = 0.0, hi = s;
        for (int it = 0; it < 100; ++it) {
          const double a = 0.5 * (lo + hi);
          const double b = s - a;
          const double deriv = c * (std::log(std::max(a, 1e-320)) - std::log(std::max(b, 1e-320))) + phi.linear[i] -
                               phi.linear[j];
          if (deriv > 0.0) hi = a;
          else lo = a;
        }
        x[i] = 0.5 * (lo + hi);
        x[j] = s - x[i];
      }
    if ((x - before).lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  return x;
}

/// Separable case (l1 with a box or free space): ternary search per coordinate.
/// Subgradient steps crawl when a coordinate sits barely inside the kink.
inline Vector coordinate_search(const ProxSetup& setup, const EstimateFunction& phi, const HTerm& h) {
  const FeasibleSet set = effective_set(setup, h);
  const Eigen::Index n = setup.dimension();
  const double tau = phi.h_scale * lambda_of(h);
  const double reach = (phi.linear.lpNorm<Eigen::Infinity>() + tau) / phi.d_scale + 1.0;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = setup.center()[i];
    auto f = [&](double t) { return 0.5 * phi.d_scale * (t - c) * (t - c) + phi.linear[i] * t + tau * std::abs(t); };
    double lo = c - reach, hi = c + reach;
    if (set.kind == FeasibleSet::Kind::box) {
      lo = set.lower[i];
      hi = set.upper[i];
    }
    for (int it = 0; it < 300; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (f(m1) <= f(m2)) hi = m2;
      else lo = m1;
    }
    x[i] = 0.5 * (lo + hi);
    // The minimizer is often exactly zero; snap when that is at least as good.
    if (lo <= 0.0 && 0.0 <= hi + 1e-15 && f(0.0) <= f(x[i])) x[i] = 0.0;
  }
  return x;
}

/// Reference minimizer: grid in dimension <= 3, iterative otherwise.
inline Vector solve(const ProxSetup& setup, const EstimateFunction& phi, const HTerm& h) {
  if (setup.kind() == ProxSetup::Kind::entropy)
    return setup.dimension() <= 3 ? grid_search(setup, phi, h) : entropy_pairwise(setup, phi);
  if (setup.dimension() <= 3) return grid_search(setup, phi, h);
  if (lambda_of(h) > 0.0) return coordinate_search(setup, phi, h);
  return projected_subgradient(setup, phi, h);
}

}  // namespace oracle
