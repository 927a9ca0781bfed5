#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "oracles.hpp"
#include "prox_geometry.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace triangle_opt {

enum class Mode { mst_exact_L, amst_adaptive, umst_universal, sumst_stochastic_universal };

inline std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::mst_exact_L: return "mst";
    case Mode::amst_adaptive: return "amst";
    case Mode::umst_universal: return "umst";
    case Mode::sumst_stochastic_universal: return "sumst";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string& name) {
  if (name == "mst" || name == "mst_exact_L") return Mode::mst_exact_L;
  if (name == "amst" || name == "amst_adaptive") return Mode::amst_adaptive;
  if (name == "umst" || name == "umst_universal") return Mode::umst_universal;
  if (name == "sumst" || name == "sumst_stochastic_universal") return Mode::sumst_stochastic_universal;
  return std::nullopt;
}

struct Stopping {
  enum class Kind { iterations_only, gradient_mapping, certified_gap };

  Kind kind = Kind::iterations_only;
  double threshold = 0.0;  // gradient_mapping only

  static Stopping iterations_only() { return {}; }
  static Stopping gradient_mapping(double threshold) { return {Kind::gradient_mapping, threshold}; }
  static Stopping certified_gap() { return {Kind::certified_gap, 0.0}; }
};

struct SolverConfig {
  Mode mode = Mode::mst_exact_L;
  std::optional<double> L_known;       // mst_exact_L
  double L0 = 1.0;                     // first Lipschitz trial in adaptive modes
  double mu = 0.0;
  std::optional<double> omega_tilde;   // falls back to the prox setup's value
  double epsilon = 0.0;                // target accuracy (umst / sumst, certified stop)
  std::optional<double> D;             // sumst; falls back to the oracle's bound
  /// Number of iterates produced, counting the initial prox step as iterate 0.
  int max_iters = 100;
  int max_backtracks_per_iter = 60;
  Stopping stopping;
  std::optional<double> R_sq;          // upper bound on V(x*, y0) for the certificate
  bool record_iterates = false;
  bool instrument = true;              // fill gap/distance/certificate columns
};

inline bool is_adaptive(Mode mode) { return mode != Mode::mst_exact_L; }

inline void validate(const SolverConfig& cfg) {
  if (cfg.mode == Mode::mst_exact_L) {
    if (!cfg.L_known) throw ConfigError("mst_exact_L mode requires L_known");
    if (!(*cfg.L_known > 0.0)) throw ConfigError("L_known must be positive");
  } else if (!(cfg.L0 > 0.0)) {
    throw ConfigError("L0 must be positive");
  }
  if (!(cfg.mu >= 0.0)) throw ConfigError("mu must be nonnegative");
  if (cfg.omega_tilde && !(*cfg.omega_tilde >= 1.0)) throw ConfigError("omega_tilde must be >= 1");
  if ((cfg.mode == Mode::umst_universal || cfg.mode == Mode::sumst_stochastic_universal) && !(cfg.epsilon > 0.0))
    throw ConfigError("epsilon must be positive in " + to_string(cfg.mode) + " mode");
  if (cfg.D && !(*cfg.D >= 0.0)) throw ConfigError("D must be nonnegative");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (cfg.max_backtracks_per_iter < 0) throw ConfigError("max_backtracks_per_iter must be >= 0");
  if (cfg.stopping.kind == Stopping::Kind::certified_gap) {
    if (!cfg.R_sq) throw ConfigError("certified_gap stopping requires R_sq");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("certified_gap stopping requires epsilon > 0");
  }
  if (cfg.stopping.kind == Stopping::Kind::gradient_mapping && !(cfg.stopping.threshold > 0.0))
    throw ConfigError("gradient_mapping stopping requires a positive threshold");
}

inline double effective_mu_tilde(const SolverConfig& cfg, const ProxSetup& setup) {
  return cfg.mu / cfg.omega_tilde.value_or(setup.omega_tilde());
}

struct CoefficientStep {
  double alpha = 0.0;
  double A_next = 0.0;
};

/// Positive root of L*a^2 - (1 + A*mu)*a - A*(1 + A*mu) = 0, so that
/// A_next * (1 + A*mu) = L * alpha^2 with A_next = A + alpha.
inline CoefficientStep alpha_next(double L, double A, double mu_tilde) {
  const double b = 1.0 + A * mu_tilde;
  const double c = A * b;
  const double alpha = (b + std::sqrt(b * b + 4.0 * L * c)) / (2.0 * L);
  return {alpha, A + alpha};
}

/// phi + alpha * [f_y + <g, x - y> + mu_tilde * V(x, y) + h(x)], folded into canonical form.
inline EstimateFunction fold_estimate(const EstimateFunction& phi, double alpha, const Vector& y, const Vector& g,
                                      double f_y, double mu_tilde, const ProxSetup& setup) {
  EstimateFunction out = phi;
  out.linear += alpha * g;
  out.h_scale += alpha;
  out.constant += alpha * (f_y - g.dot(y));
  if (mu_tilde != 0.0) {
    // V(x, y) = d(x) - <grad d(y), x> + (<grad d(y), y> - d(y))
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (setup.kind() == ProxSetup::Kind::entropy && !(y[i] > 0.0))
        throw DomainError("fold_estimate: prox-function gradient undefined at y");
    const Vector gd = setup.d_grad(y);
    out.d_scale += alpha * mu_tilde;
    out.linear -= alpha * mu_tilde * gd;
    out.constant += alpha * mu_tilde * (gd.dot(y) - setup.d_value(y));
  }
  return out;
}

/// True iff f_y + <g, dx> + (L/2)||dx||^2 + slack >= f(x_new).
/// The slack is added last so that a slack below the rounding unit of the
/// quadratic model leaves the decision bit-identical to the unslacked test.
inline bool descent_check(double f_y, double g_dot_dx, double dx_norm_sq, double L_trial, double slack,
                          double f_x_new) {
  const double model = (f_y + g_dot_dx) + 0.5 * L_trial * dx_norm_sq;
  return model + slack >= f_x_new;
}

/// ceil(2 D A / (L alpha eps)), at least 1.
inline std::int64_t batch_size(double D, double A_next, double alpha_next, double L_trial, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("batch_size requires epsilon > 0");
  if (!(D >= 0.0)) throw ConfigError("batch_size requires a variance bound D >= 0");
  const double raw = 2.0 * D * A_next / (L_trial * alpha_next * epsilon);
  if (!(raw < 1e15)) throw ConfigError("mini-batch size exceeds 1e15 draws");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(raw)));
}

/// Slack added to the descent test at a step with coefficients (alpha, A).
inline double mode_slack(Mode mode, double epsilon, double alpha, double A) {
  switch (mode) {
    case Mode::mst_exact_L:
    case Mode::amst_adaptive: return 0.0;
    case Mode::umst_universal: return epsilon * alpha / (2.0 * A);
    case Mode::sumst_stochastic_universal: return 3.0 * epsilon * alpha / (2.0 * A);
  }
  return 0.0;
}

struct SolverState {
  std::int64_t k = 0;
  double A = 0.0;
  double alpha = 0.0;
  Vector u, x, y;
  EstimateFunction phi;
  double L_trial = 0.0;
  int j = 0;
  std::int64_t m = 0;
  EvalCounter counters;
  /// Sum of A_{i} * slack_i over accepted steps: A_k F(x^k) <= phi_k(u^k) + slack_total.
  double slack_total = 0.0;
  Trace trace;
};

/// Next-iterate candidate for a fixed Lipschitz trial.
struct Candidate {
  CoefficientStep coeff;
  Vector y, u, x;
  Vector g;
  double f_y = 0.0;
  EstimateFunction phi;
  std::int64_t m = 0;
};

namespace detail {

using GradientFn = std::function<std::pair<Vector, std::int64_t>(const Vector& y, const CoefficientStep&)>;
using ValueFn = std::function<double(const Vector&)>;

inline void guard_coefficients(const CoefficientStep& c) {
  if (!std::isfinite(c.A_next) || !std::isfinite(c.alpha) || c.A_next > 1e300)
    throw CoefficientOverflow("A_k exceeded 1e300");
}

inline Candidate build_candidate(const SolverState& state, const ProxSetup& setup, const HTerm& h, double L,
                                 double mu_tilde, const GradientFn& gradient, const ValueFn& value_fn) {
  Candidate c;
  c.coeff = alpha_next(L, state.A, mu_tilde);
  guard_coefficients(c.coeff);
  const double a = c.coeff.alpha;
  const double A = state.A;
  const double An = c.coeff.A_next;
  c.y = (a * state.u + A * state.x) / An;
  auto [g, m] = gradient(c.y, c.coeff);
  c.g = std::move(g);
  c.m = m;
  c.f_y = value_fn(c.y);
  c.phi = fold_estimate(state.phi, a, c.y, c.g, c.f_y, mu_tilde, setup);
  c.u = composite_prox_solve(setup, c.phi, h);
  c.x = (a * c.u + A * state.x) / An;
  return c;
}

}  // namespace detail

/// One similar-triangles step with the exact gradient and a fixed L.
inline Candidate mst_step(const SolverState& state, const CompositeObjective& objective, const ProxSetup& setup,
                          double L_for_step, double mu_tilde, EvalCounter& counter) {
  return detail::build_candidate(
      state, setup, objective.h, L_for_step, mu_tilde,
      [&](const Vector& y, const CoefficientStep&) { return std::make_pair(grad(objective, y, counter), std::int64_t{0}); },
      [&](const Vector& y) { return value(objective, y, counter); });
}

/// ||x - argmin_z {<grad f(x), z - x> + L V(z, x) + h(z)}|| over Q, in the primal norm.
/// In the euclidean setup L V(z, x) = (L/2)||z - x||^2.
inline double gradient_mapping_residual(const CompositeObjective& objective, const ProxSetup& setup, const Vector& x,
                                        double L, EvalCounter& counter) {
  const Vector g = grad(objective, x, counter);
  EstimateFunction model;
  model.d_scale = L;
  model.linear = g - L * setup.d_grad(x);
  model.h_scale = 1.0;
  const Vector z = composite_prox_solve(setup, model, objective.h);
  return setup.norms().primal(x - z);
}

inline double gradient_mapping_residual(const CompositeObjective& objective, const ProxSetup& setup, const Vector& x,
                                        double L) {
  EvalCounter scratch;
  return gradient_mapping_residual(objective, setup, x, L, scratch);
}

struct IterateRecord {
  Vector u, x, y;
};

struct RunReport {
  Vector final_x;
  Vector final_u;
  /// Number of iterates produced (rows of the trace), the initial one included.
  std::int64_t iterations = 0;
  std::int64_t total_f_calls = 0;
  std::int64_t total_grad_calls = 0;
  std::int64_t total_stoch_calls = 0;
  Trace trace;
  /// (R^2 + accumulated slack) / A_N, present when R_sq is configured.
  std::optional<double> certified_gap;
  double final_A = 0.0;
  double final_L = 0.0;
  std::vector<IterateRecord> iterates;
};

namespace detail {

/// Shared iteration machinery for the four modes.
class Engine {
 public:
  Engine(const CompositeObjective& objective, const StochasticGradientOracle* oracle, const ProxSetup& setup,
         const SolverConfig& config, CounterRng rng)
      : obj_(objective), oracle_(oracle), setup_(setup), cfg_(config), rng_(rng),
        mu_tilde_(effective_mu_tilde(config, setup)) {
    validate(cfg_);
    if (cfg_.mode == Mode::sumst_stochastic_universal) {
      if (oracle_ == nullptr) throw ConfigError("sumst mode requires a stochastic gradient oracle");
      D_ = cfg_.D ? *cfg_.D : oracle_->variance_bound();
    }
    if (objective.h.kind == HTerm::Kind::indicator && !setup.feasible_set().same_as(objective.h.set) &&
        setup.feasible_set().kind != FeasibleSet::Kind::free_space)
      throw UnsupportedGeometry("objective indicator set differs from the prox feasible set");
  }

  SolverState init_phase() {
    SolverState s;
    s.k = 0;
    const Vector& y0 = setup_.center();
    s.u = y0;
    s.x = y0;
    s.y = y0;
    s.A = 0.0;
    s.phi = initial_estimate(setup_);
    const EstimateFunction phi_base = s.phi;

    const bool stochastic = cfg_.mode == Mode::sumst_stochastic_universal;
    std::optional<Vector> g0;
    std::optional<double> f0;
    if (!stochastic) {
      g0 = grad(obj_, y0, s.counters);
    }
    f0 = value(obj_, y0, s.counters);

    double L = is_adaptive(cfg_.mode) ? cfg_.L0 : *cfg_.L_known;
    for (int j = 0;; ++j) {
      const double alpha0 = 1.0 / L;
      std::int64_t m = 0;
      Vector g;
      if (stochastic) {
        m = batch_size(D_, alpha0, alpha0, L, cfg_.epsilon);
        CounterRng draw = rng_.split(0).split(static_cast<std::uint64_t>(j));
        g = minibatch_gradient(*oracle_, y0, m, draw, s.counters);
      } else {
        g = *g0;
      }
      EstimateFunction phi = fold_estimate(phi_base, alpha0, y0, g, *f0, mu_tilde_, setup_);
      Vector u0 = composite_prox_solve(setup_, phi, obj_.h);
      const double slack = mode_slack(cfg_.mode, cfg_.epsilon, alpha0, alpha0);
      bool accepted = true;
      if (is_adaptive(cfg_.mode)) {
        const double fx = value(obj_, u0, s.counters);
        const Vector dx = u0 - y0;
        const double gdx = g.dot(dx);
        accepted = descent_check(*f0, gdx, setup_.norms().primal_sq(dx), L, slack + rounding(*f0, gdx, fx), fx);
      }
      if (accepted) {
        s.alpha = alpha0;
        s.A = alpha0;
        s.u = u0;
        s.x = std::move(u0);
        s.phi = std::move(phi);
        s.L_trial = L;
        s.j = j;
        s.m = m;
        s.slack_total = alpha0 * slack;
        break;
      }
      if (j + 1 > cfg_.max_backtracks_per_iter)
        throw BacktrackLimitExceeded("initial phase exceeded the backtracking limit", 0, L);
      L = std::ldexp(cfg_.L0, j + 1);
    }
    record(s);
    return s;
  }

  SolverState backtrack_iteration(const SolverState& state) {
    SolverState next = state;
    const bool adaptive = is_adaptive(cfg_.mode);
    const double L_first = adaptive ? state.L_trial / 2.0 : *cfg_.L_known;
    double L = L_first;
    for (int j = 0;; ++j) {
      Candidate c = candidate(state, next.counters, L, j);
      const double slack = mode_slack(cfg_.mode, cfg_.epsilon, c.coeff.alpha, c.coeff.A_next);
      bool accepted = true;
      if (adaptive) {
        const double fx = value(obj_, c.x, next.counters);
        const Vector dx = c.x - c.y;
        const double gdx = c.g.dot(dx);
        accepted = descent_check(c.f_y, gdx, setup_.norms().primal_sq(dx), L, slack + rounding(c.f_y, gdx, fx), fx);
      }
      if (accepted) {
        next.k = state.k + 1;
        next.alpha = c.coeff.alpha;
        next.A = c.coeff.A_next;
        next.u = std::move(c.u);
        next.x = std::move(c.x);
        next.y = std::move(c.y);
        next.phi = std::move(c.phi);
        next.L_trial = L;
        next.j = j;
        next.m = c.m;
        next.slack_total = state.slack_total + c.coeff.A_next * slack;
        break;
      }
      if (j + 1 > cfg_.max_backtracks_per_iter)
        throw BacktrackLimitExceeded("iteration " + std::to_string(state.k + 1) + " exceeded the backtracking limit",
                                     static_cast<int>(state.k + 1), L);
      L = std::ldexp(L_first, j + 1);
    }
    record(next);
    return next;
  }

  RunReport run() {
    RunReport report;
    SolverState s = init_phase();
    if (cfg_.record_iterates) report.iterates.push_back({s.u, s.x, s.y});
    while (!should_stop(s) && s.k + 1 < cfg_.max_iters) {
      s = backtrack_iteration(s);
      if (cfg_.record_iterates) report.iterates.push_back({s.u, s.x, s.y});
    }
    report.final_x = s.x;
    report.final_u = s.u;
    report.iterations = s.k + 1;
    report.total_f_calls = s.counters.f_calls;
    report.total_grad_calls = s.counters.grad_calls;
    report.total_stoch_calls = s.counters.stochastic_grad_calls;
    report.final_A = s.A;
    report.final_L = s.L_trial;
    if (cfg_.R_sq) report.certified_gap = (*cfg_.R_sq + s.slack_total) / s.A;
    report.trace = std::move(s.trace);
    return report;
  }

 private:
  // Floating-point floor for the acceptance test; without it L inflates once gaps reach rounding level.
  static double rounding(double f_y, double g_dot_dx, double f_x) {
    return 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(f_y) + std::abs(g_dot_dx) + std::abs(f_x));
  }

  Candidate candidate(const SolverState& state, EvalCounter& counter, double L, int j) {
    if (cfg_.mode == Mode::sumst_stochastic_universal) {
      CounterRng draw = rng_.split(static_cast<std::uint64_t>(state.k + 1)).split(static_cast<std::uint64_t>(j));
      return build_candidate(
          state, setup_, obj_.h, L, mu_tilde_,
          [&](const Vector& y, const CoefficientStep& coeff) {
            const std::int64_t m = batch_size(D_, coeff.A_next, coeff.alpha, L, cfg_.epsilon);
            return std::make_pair(minibatch_gradient(*oracle_, y, m, draw, counter), m);
          },
          [&](const Vector& y) { return value(obj_, y, counter); });
    }
    return mst_step(state, obj_, setup_, L, mu_tilde_, counter);
  }

  bool should_stop(SolverState& s) {
    switch (cfg_.stopping.kind) {
      case Stopping::Kind::iterations_only: return false;
      case Stopping::Kind::gradient_mapping:
        return gradient_mapping_residual(obj_, setup_, s.x, s.L_trial, s.counters) <= cfg_.stopping.threshold;
      case Stopping::Kind::certified_gap: {
        const double target = cfg_.mode == Mode::sumst_stochastic_universal ? 2.0 * cfg_.epsilon : cfg_.epsilon;
        return (*cfg_.R_sq + s.slack_total) / s.A <= target;
      }
    }
    return false;
  }

  void record(SolverState& s) const {
    TraceRow row;
    row.k = s.k;
    row.A = s.A;
    row.alpha = s.alpha;
    row.L_trial = s.L_trial;
    row.j = s.j;
    row.m = s.m;
    row.cum_f = s.counters.f_calls;
    row.cum_grad = s.counters.grad_calls;
    row.cum_stoch = s.counters.stochastic_grad_calls;
    if (cfg_.instrument) {
      const double Fx = obj_.F(s.x);
      row.cert_lhs = s.A * Fx;
      row.cert_rhs = s.phi.evaluate(setup_, obj_.h, s.u) + s.slack_total;
      row.cert_scale = s.phi.magnitude(setup_, obj_.h, s.u) + std::abs(s.A * Fx) + std::abs(s.slack_total);
      if (obj_.known_optimum) {
        const auto& opt = *obj_.known_optimum;
        row.gap = Fx - opt.F;
        row.gap_y = obj_.F(s.y) - opt.F;
        const NormPair& norms = setup_.norms();
        row.dist_u_sq = norms.primal_sq(s.u - opt.x);
        row.dist_x_sq = norms.primal_sq(s.x - opt.x);
        row.dist_y_sq = norms.primal_sq(s.y - opt.x);
      }
    }
    s.trace.rows.push_back(row);
  }

  const CompositeObjective& obj_;
  const StochasticGradientOracle* oracle_;
  const ProxSetup& setup_;
  const SolverConfig& cfg_;
  CounterRng rng_;
  double mu_tilde_;
  double D_ = 0.0;
};

}  // namespace detail

/// Iterate 0: the doubling loop on L_0 (adaptive modes) around the first prox step.
inline SolverState init_phase(const CompositeObjective& objective, const ProxSetup& setup, const SolverConfig& config,
                              CounterRng rng = CounterRng()) {
  return detail::Engine(objective, nullptr, setup, config, rng).init_phase();
}

inline SolverState init_phase(const StochasticGradientOracle& oracle, const ProxSetup& setup,
                              const SolverConfig& config, CounterRng rng) {
  return detail::Engine(oracle.base, &oracle, setup, config, rng).init_phase();
}

/// One accepted iteration. Each rejected trial doubles L and rebuilds the whole
/// candidate (alpha, y, phi, u, x, and in sumst the batch) from the pre-step state.
inline SolverState backtrack_iteration(const SolverState& state, const CompositeObjective& objective,
                                       const ProxSetup& setup, const SolverConfig& config,
                                       CounterRng rng = CounterRng()) {
  return detail::Engine(objective, nullptr, setup, config, rng).backtrack_iteration(state);
}

inline SolverState backtrack_iteration(const SolverState& state, const StochasticGradientOracle& oracle,
                                       const ProxSetup& setup, const SolverConfig& config, CounterRng rng) {
  return detail::Engine(oracle.base, &oracle, setup, config, rng).backtrack_iteration(state);
}

inline RunReport run(const CompositeObjective& objective, const ProxSetup& setup, const SolverConfig& config,
                     CounterRng rng = CounterRng()) {
  return detail::Engine(objective, nullptr, setup, config, rng).run();
}

inline RunReport run(const StochasticGradientOracle& oracle, const ProxSetup& setup, const SolverConfig& config,
                     CounterRng rng) {
  return detail::Engine(oracle.base, &oracle, setup, config, rng).run();
}

}  // namespace triangle_opt
