#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace triangle_opt {

/// One accepted iterate.
///
/// The first ten fields are the persisted columns. The remaining optionals are
/// in-memory instrumentation filled when the objective has a known optimum;
/// they are not written to trace files.
struct TraceRow {
  std::int64_t k = 0;
  double A = 0.0;
  double alpha = 0.0;
  double L_trial = 0.0;
  int j = 0;
  std::int64_t m = 0;
  std::int64_t cum_f = 0;
  std::int64_t cum_grad = 0;
  std::int64_t cum_stoch = 0;
  std::optional<double> gap;  // F(x^k) - F*

  std::optional<double> gap_y;      // F(y^k) - F*
  std::optional<double> dist_u_sq;  // ||u^k - x*||^2 in the primal norm
  std::optional<double> dist_x_sq;
  std::optional<double> dist_y_sq;
  /// Estimate-sequence certificate A_k F(x^k) <= phi_k(u^k) + accumulated slack.
  std::optional<double> cert_lhs;
  std::optional<double> cert_rhs;
  std::optional<double> cert_scale;
};

struct Trace {
  std::vector<TraceRow> rows;

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
  const TraceRow& back() const { return rows.back(); }
};

}  // namespace triangle_opt
