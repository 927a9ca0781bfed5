#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../trace.hpp"

namespace triangle_opt::bench {

enum class Theorem { t1, t2_t3, c1, c2, t6_work, t9_scaling, t10_calls, t5_halving };

inline const std::vector<std::string>& theorem_ids() {
  static const std::vector<std::string> ids = {"t1",         "t2_t3",     "c1",        "c2",
                                               "t6_work",    "t9_scaling", "t10_calls", "t5_halving"};
  return ids;
}

inline std::string to_string(Theorem t) { return theorem_ids()[static_cast<std::size_t>(t)]; }

inline std::optional<Theorem> parse_theorem(const std::string& id) {
  const auto& ids = theorem_ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<Theorem>(i);
  return std::nullopt;
}

struct BoundParams {
  double L = 1.0;
  double R2 = 0.0;  // bound on V(x*, y0)
  std::optional<double> mu;
  std::optional<double> D;
  std::optional<double> L0;       // t6_work
  std::optional<double> epsilon;  // t9_scaling, t10_calls
  std::optional<double> R_tilde2; // c1, c2
  std::optional<double> nu;       // t9_scaling
  std::optional<double> L_nu;     // t9_scaling
  double omega_tilde = 1.0;
  /// Absolute slack added to every bound; defaults per theorem when absent.
  std::optional<double> tolerance;
};

struct RowVerdict {
  std::int64_t k = 0;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - value
  bool pass = true;
  std::string quantity;
};

struct Verdict {
  Theorem theorem = Theorem::t1;
  std::vector<RowVerdict> rows;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> failing_k;

  bool passed() const { return failing_k.empty(); }

  std::string table() const {
    std::ostringstream out;
    out.precision(6);
    out << "theorem " << to_string(theorem) << ": " << (passed() ? "PASS" : "FAIL") << " (" << rows.size()
        << " checks, worst margin " << worst_margin << ")\n";
    out << "k\tquantity\tvalue\tbound\tmargin\tresult\n";
    for (const RowVerdict& r : rows)
      out << r.k << '\t' << r.quantity << '\t' << r.value << '\t' << r.bound << '\t' << r.margin << '\t'
          << (r.pass ? "pass" : "FAIL") << '\n';
    if (!failing_k.empty()) {
      out << "failing k:";
      for (auto k : failing_k) out << ' ' << k;
      out << '\n';
    }
    return out.str();
  }
};

/// Bounds used in several places.
inline double convex_rate_bound(double L, double R2, std::int64_t N) {
  const double n1 = static_cast<double>(N + 1);
  return 4.0 * L * R2 / (n1 * n1);
}

inline double strongly_convex_bound(double L, double R2, double mu_tilde, std::int64_t N) {
  return L * R2 * std::exp(-0.5 * static_cast<double>(N) * std::sqrt(mu_tilde / L));
}

/// Iteration estimate (L_nu (16 R)^(1+nu) / eps)^(2 / (1 + 3 nu)) for the universal method.
inline double universal_iteration_estimate(double L_nu, double nu, double R2, double epsilon) {
  const double R = std::sqrt(R2);
  return std::pow(L_nu * std::pow(16.0 * R, 1.0 + nu) / epsilon, 2.0 / (1.0 + 3.0 * nu));
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_slope needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ConfigError("fit_slope: x values are all equal");
  return sxy / sxx;
}

namespace detail {

inline void add(Verdict& v, std::int64_t k, const std::string& quantity, double value, double bound) {
  RowVerdict r;
  r.k = k;
  r.quantity = quantity;
  r.value = value;
  r.bound = bound;
  r.margin = bound - value;
  r.pass = value <= bound;
  v.worst_margin = std::min(v.worst_margin, r.margin);
  if (!r.pass && (v.failing_k.empty() || v.failing_k.back() != k)) v.failing_k.push_back(k);
  v.rows.push_back(std::move(r));
}

inline double require(const std::optional<double>& field, const char* column) {
  if (!field) throw MissingColumn(column);
  return *field;
}

inline double require_param(const std::optional<double>& p, const char* name) {
  if (!p) throw ConfigError(std::string("bound check needs parameter ") + name);
  return *p;
}

}  // namespace detail

/// Row-by-row comparison of a trace against one proven bound.
inline Verdict check_bounds(const Trace& trace, Theorem theorem, const BoundParams& params) {
  Verdict v;
  v.theorem = theorem;
  const double L = params.L;
  const double R2 = params.R2;
  switch (theorem) {
    case Theorem::t1: {
      const double tol = params.tolerance.value_or(1e-10);
      for (const TraceRow& r : trace.rows)
        detail::add(v, r.k, "gap", detail::require(r.gap, "gap"), convex_rate_bound(L, R2, r.k) + tol);
      break;
    }
    case Theorem::t2_t3: {
      const double tol = params.tolerance.value_or(1e-10);
      const double mu_tilde = detail::require_param(params.mu, "mu") / params.omega_tilde;
      for (const TraceRow& r : trace.rows) {
        const double b = std::min(convex_rate_bound(L, R2, r.k), strongly_convex_bound(L, R2, mu_tilde, r.k));
        detail::add(v, r.k, "gap", detail::require(r.gap, "gap"), b + tol);
      }
      break;
    }
    case Theorem::c1: {
      const double tol = params.tolerance.value_or(1e-8);
      const double Rt2 = detail::require_param(params.R_tilde2, "R_tilde2");
      for (const TraceRow& r : trace.rows) {
        detail::add(v, r.k, "dist_u_sq", detail::require(r.dist_u_sq, "dist_u_sq"), 2.0 * R2 + tol);
        const double xy = std::max(detail::require(r.dist_x_sq, "dist_x_sq"), detail::require(r.dist_y_sq, "dist_y_sq"));
        detail::add(v, r.k, "dist_xy_sq", xy, Rt2 + tol);
      }
      break;
    }
    case Theorem::c2: {
      const double tol = params.tolerance.value_or(1e-10);
      const double Rt2 = detail::require_param(params.R_tilde2, "R_tilde2");
      for (const TraceRow& r : trace.rows) {
        if (r.k < 1) continue;
        const double worst = std::max(detail::require(r.gap, "gap"), detail::require(r.gap_y, "gap_y"));
        const double N = static_cast<double>(r.k);
        detail::add(v, r.k, "max_gap_xy", worst, L * Rt2 / (N * N) + tol);
      }
      break;
    }
    case Theorem::t6_work: {
      const double L0 = detail::require_param(params.L0, "L0");
      const double lg = std::log2(2.0 * L / L0);
      const double tol = params.tolerance.value_or(0.0);
      for (const TraceRow& r : trace.rows) {
        const double N = static_cast<double>(r.k);
        detail::add(v, r.k, "cum_f", static_cast<double>(r.cum_f), 4.0 * N + lg + 4.0 + tol);
        detail::add(v, r.k, "cum_grad", static_cast<double>(r.cum_grad), 2.0 * N + lg + 2.0 + tol);
      }
      break;
    }
    case Theorem::t9_scaling: {
      const double eps = detail::require_param(params.epsilon, "epsilon");
      const double nu = detail::require_param(params.nu, "nu");
      const double L_nu = detail::require_param(params.L_nu, "L_nu");
      const double N_est = universal_iteration_estimate(L_nu, nu, R2, eps);
      std::optional<std::int64_t> reached;
      for (const TraceRow& r : trace.rows)
        if (detail::require(r.gap, "gap") <= eps) {
          reached = r.k;
          break;
        }
      const double value = reached ? static_cast<double>(*reached) : std::numeric_limits<double>::infinity();
      if (!trace.rows.empty()) detail::add(v, reached.value_or(trace.back().k), "iterations_to_eps", value, N_est);
      break;
    }
    case Theorem::t10_calls: {
      const double eps = detail::require_param(params.epsilon, "epsilon");
      const double D = detail::require_param(params.D, "D");
      const double tol = params.tolerance.value_or(0.0);
      for (const TraceRow& r : trace.rows) {
        const double N = static_cast<double>(r.k);
        detail::add(v, r.k, "cum_stoch", static_cast<double>(r.cum_stoch),
                    4.0 * (4.0 * D * R2 / (eps * eps) + 2.0 * N) + tol);
      }
      break;
    }
    case Theorem::t5_halving: {
      const double tol = params.tolerance.value_or(1e-9);
      const double mu = detail::require_param(params.mu, "mu");
      // mu ||y0 - x*||^2 = 2 mu V(x*, y0) in the euclidean setup.
      for (const TraceRow& r : trace.rows)
        detail::add(v, r.k, "gap", detail::require(r.gap, "gap"), mu * 2.0 * R2 / std::ldexp(1.0, static_cast<int>(r.k + 1)) + tol);
      break;
    }
  }
  if (v.rows.empty()) v.worst_margin = 0.0;
  return v;
}

}  // namespace triangle_opt::bench
