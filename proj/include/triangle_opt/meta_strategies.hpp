#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "errors.hpp"
#include "oracles.hpp"
#include "prox_geometry.hpp"
#include "solvers.hpp"

namespace triangle_opt {

struct Regularized {
  CompositeObjective objective;
  double mu_reg = 0.0;
};

/// F^mu(x) = F(x) + mu V(x, y0) with mu = epsilon / (2 R_sq).
///
/// An eps/2-solution of F^mu is an eps-solution of F whenever V(x*, y0) <= R_sq.
inline Regularized regularize(const CompositeObjective& objective, const ProxSetup& setup, double epsilon,
                              std::optional<double> R_sq) {
  if (!R_sq) throw ConfigError("regularize requires an upper bound R_sq on V(x*, y0)");
  if (!(*R_sq > 0.0)) throw ConfigError("R_sq must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const double mu = epsilon / (2.0 * *R_sq);

  Regularized out;
  out.mu_reg = mu;
  CompositeObjective& reg = out.objective;
  const Vector y0 = setup.center();
  const Vector grad_d_y0 = setup.d_grad(y0);
  const double d_y0 = setup.d_value(y0);
  auto base_value = objective.smooth_value;
  auto base_grad = objective.smooth_grad;
  reg.smooth_value = [=](const Vector& x) {
    return base_value(x) + mu * (setup.d_value(x) - d_y0 - grad_d_y0.dot(x - y0));
  };
  reg.smooth_grad = [=](const Vector& x) -> Vector { return base_grad(x) + mu * (setup.d_grad(x) - grad_d_y0); };
  reg.h = objective.h;
  reg.smoothness = objective.smoothness;
  if (reg.smoothness.L && setup.kind() == ProxSetup::Kind::euclidean) *reg.smoothness.L += mu;
  else reg.smoothness.L.reset();
  reg.smoothness.L_nu.reset();
  reg.smoothness.nu.reset();
  reg.smoothness.mu += mu;
  // The minimizer moves, so the original optimum no longer applies.
  reg.known_optimum.reset();
  return out;
}

struct RestartPlan {
  std::int64_t inner_iters = 1;  // N-bar
  int n_restarts = 0;            // K
  double L = 0.0;
  double mu = 0.0;
  double omega = 1.0;
};

/// N-bar = ceil(sqrt(8 L omega / mu)).
inline RestartPlan make_restart_plan(double L, double mu, double omega, int K) {
  if (!(L > 0.0)) throw ConfigError("restart plan needs L > 0");
  if (!(mu > 0.0)) throw ConfigError("restart plan needs mu > 0");
  if (!(omega >= 1.0)) throw ConfigError("restart plan needs omega >= 1");
  if (K < 0) throw ConfigError("restart count must be >= 0");
  RestartPlan plan;
  plan.inner_iters = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::sqrt(8.0 * L * omega / mu))));
  plan.n_restarts = K;
  plan.L = L;
  plan.mu = mu;
  plan.omega = omega;
  return plan;
}

/// K = ceil(log2(mu * dist_sq_bound / (2 eps))), at least 0.
inline int restarts_for_target(double mu, double dist_sq_bound, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const double ratio = mu * dist_sq_bound / (2.0 * epsilon);
  if (!(ratio > 1.0)) return 0;
  return static_cast<int>(std::ceil(std::log2(ratio)));
}

/// K restarts of the exact-L method, each run for N-bar steps and re-centered
/// at its output. One trace row per restart, k = 1..K; the gap column holds
/// F([x]^k) - F* when the optimum is known.
inline RunReport restart_run(const CompositeObjective& objective, const ProxSetup& setup, double L, double mu,
                             double omega, int K, const SolverConfig& inner = {}) {
  const RestartPlan plan = make_restart_plan(L, mu, omega, K);
  RunReport report;
  report.final_x = setup.center();
  report.final_u = setup.center();
  if (K == 0) return report;
  if (objective.h.kind == HTerm::Kind::indicator)
    throw UnsupportedGeometry("restarts support h in {zero, l1} on free space only");

  SolverConfig cfg = inner;
  cfg.mode = Mode::mst_exact_L;
  cfg.L_known = L;
  cfg.mu = 0.0;
  cfg.stopping = Stopping::iterations_only();
  cfg.R_sq.reset();
  // Iterate index N-bar, i.e. N-bar steps after the initial prox step.
  cfg.max_iters = static_cast<int>(plan.inner_iters + 1);

  ProxSetup current = recenter(setup, setup.center());
  EvalCounter totals;
  for (int r = 1; r <= K; ++r) {
    RunReport inner_report = run(objective, current, cfg);
    totals.f_calls += inner_report.total_f_calls;
    totals.grad_calls += inner_report.total_grad_calls;
    totals.stochastic_grad_calls += inner_report.total_stoch_calls;
    report.iterations += inner_report.iterations;

    TraceRow row;
    const TraceRow& last = inner_report.trace.back();
    row.k = r;
    row.A = last.A;
    row.alpha = last.alpha;
    row.L_trial = L;
    row.cum_f = totals.f_calls;
    row.cum_grad = totals.grad_calls;
    row.cum_stoch = totals.stochastic_grad_calls;
    if (objective.known_optimum) {
      const auto& opt = *objective.known_optimum;
      row.gap = objective.F(inner_report.final_x) - opt.F;
      row.dist_x_sq = current.norms().primal_sq(inner_report.final_x - opt.x);
    }
    report.trace.rows.push_back(row);
    if (cfg.record_iterates)
      report.iterates.push_back({inner_report.final_u, inner_report.final_x, inner_report.final_x});

    report.final_x = inner_report.final_x;
    report.final_u = inner_report.final_u;
    report.final_A = inner_report.final_A;
    report.final_L = L;
    current = recenter(current, inner_report.final_x);
  }
  report.total_f_calls = totals.f_calls;
  report.total_grad_calls = totals.grad_calls;
  report.total_stoch_calls = totals.stochastic_grad_calls;
  return report;
}

/// L = L_nu [L_nu / (2 delta) * (1 - nu) / (1 + nu)]^((1 - nu) / (1 + nu)).
///
/// With this L, f(x) <= f(y) + <grad f(y), x - y> + (L/2)||x - y||^2 + delta
/// for any f whose gradient is (nu, L_nu)-Hoelder.
inline double holder_majorant_L(double L_nu, double nu, double delta) {
  if (!(L_nu > 0.0)) throw ConfigError("L_nu must be positive");
  if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("nu must lie in [0, 1]");
  if (nu == 1.0) return L_nu;
  if (!(delta > 0.0)) throw ConfigError("delta must be positive when nu < 1");
  const double e = (1.0 - nu) / (1.0 + nu);
  return L_nu * std::pow(L_nu / (2.0 * delta) * e, e);
}

}  // namespace triangle_opt
