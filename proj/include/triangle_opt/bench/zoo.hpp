#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../errors.hpp"
#include "../oracles.hpp"
#include "../prox_geometry.hpp"
#include "../rng.hpp"

namespace triangle_opt::bench {

using Matrix = Eigen::MatrixXd;

enum class ProblemKind { quadratic, lasso, holder_norm_power, logistic, simplex_linear };

inline const std::vector<std::string>& problem_kinds() {
  static const std::vector<std::string> kinds = {"quadratic", "lasso", "holder_norm_power", "logistic",
                                                 "simplex_linear"};
  return kinds;
}

inline std::string to_string(ProblemKind kind) {
  return problem_kinds()[static_cast<std::size_t>(kind)];
}

inline std::optional<ProblemKind> parse_problem_kind(const std::string& name) {
  const auto& kinds = problem_kinds();
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == name) return static_cast<ProblemKind>(i);
  return std::nullopt;
}

enum class OptimumPolicy { analytic, precompute_by_long_run, none };

inline std::string to_string(OptimumPolicy p) {
  switch (p) {
    case OptimumPolicy::analytic: return "analytic";
    case OptimumPolicy::precompute_by_long_run: return "precompute_by_long_run";
    case OptimumPolicy::none: return "none";
  }
  return "?";
}

/// Parameters of one generated instance. Fields irrelevant to `kind` are ignored.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  int dimension = 10;
  std::uint64_t seed = 0;

  // quadratic: f = 1/2 (x - x_ref)' H (x - x_ref) + offset, spectrum linspace(mu, L).
  double L = 1.0;
  double mu = 0.0;
  double offset = 0.0;
  bool centered = false;  // x_ref = 0 instead of a seeded point
  // Explicit alternative: f = 1/2 x' H x - b' x.
  std::optional<Matrix> H;
  std::optional<Vector> b;

  // Distance from the start point y0 to x_ref (quadratic, holder_norm_power).
  double start_distance = 1.0;

  // lasso / logistic
  int samples = 0;  // 0: 2 * dimension
  double lambda = 0.1;
  std::optional<Matrix> design;
  std::optional<Vector> targets;  // lasso targets or logistic labels (+-1)
  double ridge = 1e-3;            // logistic

  // holder_norm_power: f = (1/p) ||x||^p
  double p = 1.5;

  // simplex_linear
  std::optional<Vector> costs;
};

/// A ready-to-run instance.
struct ZooProblem {
  std::string name;
  CompositeObjective objective;
  ProxSetup setup = ProxSetup::euclidean(Vector::Zero(1));
  OptimumPolicy optimum_policy = OptimumPolicy::none;
  /// V(x*, y0), when the optimum is known.
  std::optional<double> R_sq;
  /// Component gradients averaging to grad f (logistic only).
  std::vector<std::function<Vector(const Vector&)>> components;
  std::string description;
};

inline std::string describe_kind(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic:
      return "quadratic: f(x) = 1/2 (x - x_ref)' H (x - x_ref) + offset, H = Q diag(linspace(mu, L)) Q' with a\n"
             "seeded orthogonal Q. L and mu are exact. Optimum analytic (for mu = 0 the point of the solution\n"
             "set nearest y0). Parameters: dimension, seed, L, mu, offset, centered, start_distance.";
    case ProblemKind::lasso:
      return "lasso: f(x) = 1/2 ||M x - t||^2, h(x) = lambda ||x||_1, gaussian design with samples rows.\n"
             "L = largest eigenvalue of M'M. F* precomputed by a long proximal-gradient run.\n"
             "Parameters: dimension, samples, seed, lambda.";
    case ProblemKind::holder_norm_power:
      return "holder_norm_power: f(x) = (1/p) ||x||_2^p with 1 < p <= 2; the gradient is (p - 1)-Hoelder with\n"
             "constant 2^(2 - p). x* = 0, F* = 0. Parameters: dimension, seed, p, start_distance.";
    case ProblemKind::logistic:
      return "logistic: f(x) = mean log(1 + exp(-b_i <z_i, x>)) + ridge/2 ||x||^2 on a seeded gaussian design.\n"
             "F* precomputed by Newton's method. Exposes per-sample component gradients for finite_sum noise.\n"
             "Parameters: dimension, samples, seed, ridge.";
    case ProblemKind::simplex_linear:
      return "simplex_linear: f(x) = <c, x> on the probability simplex with the entropy prox setup.\n"
             "x* = vertex of the smallest cost. Parameters: dimension, seed, costs.";
  }
  return "";
}

namespace detail {

inline Matrix random_orthogonal(int n, CounterRng& rng) {
  Matrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  // Fix column signs so Q is a deterministic function of g.
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

inline Vector random_unit(int n, CounterRng& rng) {
  Vector v = rng.normal_vector(n);
  return v / v.norm();
}

inline Matrix gaussian_matrix(int rows, int cols, CounterRng& rng) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

inline double log1pexp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Consistency of value and gradient at a few points near y0.
inline void check_gradient(const CompositeObjective& obj, const Vector& y0, CounterRng rng, double radius) {
  for (int trial = 0; trial < 3; ++trial) {
    const Vector x = y0 + 0.5 * radius * random_unit(static_cast<int>(y0.size()), rng);
    const Vector g = obj.smooth_grad(x);
    const Vector fd = finite_difference_gradient(obj, x, 1e-6);
    const double scale = std::max(1.0, g.norm());
    if (!((g - fd).norm() <= 1e-5 * scale))
      throw Error("zoo instance failed the finite-difference gradient check");
  }
}

}  // namespace detail

inline ZooProblem make_quadratic(const ProblemSpec& spec) {
  const int n = spec.dimension;
  if (n < 1) throw ConfigError("quadratic: dimension must be >= 1");
  CounterRng rng(spec.seed, 0x51AD);
  Matrix H;
  Vector x_ref;
  double L, mu;
  std::optional<Vector> y0;
  if (spec.H) {
    H = 0.5 * (*spec.H + spec.H->transpose());
    if (H.rows() != n) throw ConfigError("quadratic: H does not match the dimension");
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    mu = std::max(0.0, es.eigenvalues().minCoeff());
    L = es.eigenvalues().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, L)) throw ConfigError("quadratic: H is not PSD");
    const Vector b = spec.b.value_or(Vector::Zero(n));
    x_ref = es.eigenvectors() *
            (es.eigenvalues().array() > 1e-12 * std::max(1.0, L))
                .select((es.eigenvectors().transpose() * b).array() / es.eigenvalues().array(), 0.0)
                .matrix();
    if ((H * x_ref - b).norm() > 1e-9 * std::max(1.0, b.norm())) throw ConfigError("quadratic: H x = b is inconsistent");
  } else {
    if (!(spec.L > 0.0) || !(spec.mu >= 0.0) || spec.mu > spec.L) throw ConfigError("quadratic: need 0 <= mu <= L");
    L = spec.L;
    mu = n == 1 ? spec.L : spec.mu;
    Vector spectrum(n);
    for (int i = 0; i < n; ++i)
      spectrum[i] = n == 1 ? L : spec.mu + (spec.L - spec.mu) * static_cast<double>(i) / (n - 1);
    const Matrix Q = detail::random_orthogonal(n, rng);
    H = Q * spectrum.asDiagonal() * Q.transpose();
    H = 0.5 * (H + H.transpose());
    x_ref = spec.centered ? Vector::Zero(n) : rng.normal_vector(n);
  }
  y0 = x_ref + spec.start_distance * detail::random_unit(n, rng);

  // x*: nearest solution to y0 (the solution set is x_ref + ker H).
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const double tol = 1e-12 * std::max(1.0, L);
  Vector x_star = *y0;
  const Vector delta = *y0 - x_ref;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()[i] > tol) x_star -= es.eigenvectors().col(i) * es.eigenvectors().col(i).dot(delta);

  // For an explicit H this shift makes f = 1/2 x'Hx - b'x exactly.
  const double off = spec.H ? spec.offset - 0.5 * x_ref.dot(H * x_ref) : spec.offset;
  ZooProblem prob;
  prob.name = "quadratic";
  prob.objective.smooth_value = [H, x_ref, off](const Vector& x) {
    const Vector d = x - x_ref;
    return 0.5 * d.dot(H * d) + off;
  };
  prob.objective.smooth_grad = [H, x_ref](const Vector& x) -> Vector { return H * (x - x_ref); };
  prob.objective.h = HTerm::zero();
  prob.objective.smoothness.L = L;
  prob.objective.smoothness.mu = mu;
  prob.objective.smoothness.nu = 1.0;
  prob.objective.smoothness.L_nu = L;
  prob.setup = ProxSetup::euclidean(*y0);
  prob.objective.known_optimum = KnownOptimum{x_star, prob.objective.F(x_star)};
  prob.optimum_policy = OptimumPolicy::analytic;
  prob.R_sq = bregman_divergence(prob.setup, x_star, *y0);
  prob.description = describe_kind(ProblemKind::quadratic);
  detail::check_gradient(prob.objective, *y0, CounterRng(spec.seed, 0xFD), std::max(1.0, spec.start_distance));
  return prob;
}

inline ZooProblem make_lasso(const ProblemSpec& spec) {
  const int n = spec.dimension;
  if (n < 1) throw ConfigError("lasso: dimension must be >= 1");
  CounterRng rng(spec.seed, 0x1A550);
  Matrix M;
  Vector t;
  if (spec.design) {
    M = *spec.design;
    if (M.cols() != n) throw ConfigError("lasso: design does not match the dimension");
    if (!spec.targets || spec.targets->size() != M.rows()) throw ConfigError("lasso: targets missing or mis-sized");
    t = *spec.targets;
  } else {
    const int m = spec.samples > 0 ? spec.samples : 2 * n;
    M = detail::gaussian_matrix(m, n, rng) / std::sqrt(static_cast<double>(m));
    Vector x_true = Vector::Zero(n);
    for (int i = 0; i < n; i += 3) x_true[i] = rng.normal();
    t = M * x_true + 0.1 * rng.normal_vector(m);
  }
  if (!(spec.lambda >= 0.0)) throw ConfigError("lasso: lambda must be nonnegative");
  const Matrix MtM = M.transpose() * M;
  const Vector Mtt = M.transpose() * t;
  Eigen::SelfAdjointEigenSolver<Matrix> es(MtM);
  const double L = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double mu = std::max(0.0, es.eigenvalues().minCoeff());

  ZooProblem prob;
  prob.name = "lasso";
  prob.objective.smooth_value = [M, t](const Vector& x) { return 0.5 * (M * x - t).squaredNorm(); };
  prob.objective.smooth_grad = [M, t](const Vector& x) -> Vector { return M.transpose() * (M * x - t); };
  prob.objective.h = HTerm::l1(spec.lambda);
  prob.objective.smoothness.L = L;
  prob.objective.smoothness.mu = mu;
  const Vector y0 = Vector::Zero(n);
  prob.setup = ProxSetup::euclidean(y0);

  // Reference solution: proximal gradient with step 1/L until the iterates stall.
  Vector x = y0;
  const double tau = spec.lambda / L;
  for (int it = 0; it < 1000000; ++it) {
    const Vector z = x - (MtM * x - Mtt) / L;
    Vector next = (z.array().sign() * (z.array().abs() - tau).max(0.0)).matrix();
    const double step = (next - x).norm();
    x = std::move(next);
    if (step <= 1e-15 * std::max(1.0, x.norm())) break;
  }
  prob.objective.known_optimum = KnownOptimum{x, prob.objective.F(x)};
  prob.optimum_policy = OptimumPolicy::precompute_by_long_run;
  prob.R_sq = bregman_divergence(prob.setup, x, y0);
  prob.description = describe_kind(ProblemKind::lasso);
  detail::check_gradient(prob.objective, y0, CounterRng(spec.seed, 0xFD), 1.0);
  return prob;
}

inline ZooProblem make_holder_norm_power(const ProblemSpec& spec) {
  const int n = spec.dimension;
  if (n < 1) throw ConfigError("holder_norm_power: dimension must be >= 1");
  const double p = spec.p;
  if (!(p > 1.0 && p <= 2.0)) throw ConfigError("holder_norm_power: p must lie in (1, 2]");
  CounterRng rng(spec.seed, 0x40DE);
  const Vector y0 = spec.start_distance * detail::random_unit(n, rng);

  ZooProblem prob;
  prob.name = "holder_norm_power";
  prob.objective.smooth_value = [p](const Vector& x) { return std::pow(x.norm(), p) / p; };
  prob.objective.smooth_grad = [p](const Vector& x) -> Vector {
    const double r = x.norm();
    if (r == 0.0) return Vector::Zero(x.size());
    return std::pow(r, p - 2.0) * x;
  };
  prob.objective.h = HTerm::zero();
  const double nu = p - 1.0;
  prob.objective.smoothness.nu = nu;
  prob.objective.smoothness.L_nu = std::pow(2.0, 1.0 - nu);
  if (p == 2.0) prob.objective.smoothness.L = 1.0;
  prob.setup = ProxSetup::euclidean(y0);
  const Vector x_star = Vector::Zero(n);
  prob.objective.known_optimum = KnownOptimum{x_star, 0.0};
  prob.optimum_policy = OptimumPolicy::analytic;
  prob.R_sq = bregman_divergence(prob.setup, x_star, y0);
  prob.description = describe_kind(ProblemKind::holder_norm_power);
  detail::check_gradient(prob.objective, y0, CounterRng(spec.seed, 0xFD), 0.5 * spec.start_distance);
  return prob;
}

inline ZooProblem make_logistic(const ProblemSpec& spec) {
  const int n = spec.dimension;
  if (n < 1) throw ConfigError("logistic: dimension must be >= 1");
  if (!(spec.ridge > 0.0)) throw ConfigError("logistic: ridge must be positive");
  CounterRng rng(spec.seed, 0x1061);
  Matrix Z;
  Vector labels;
  if (spec.design) {
    Z = *spec.design;
    if (Z.cols() != n) throw ConfigError("logistic: design does not match the dimension");
    if (!spec.targets || spec.targets->size() != Z.rows()) throw ConfigError("logistic: labels missing or mis-sized");
    labels = *spec.targets;
  } else {
    const int m = spec.samples > 0 ? spec.samples : 2 * n;
    Z = detail::gaussian_matrix(m, n, rng);
    const Vector w = rng.normal_vector(n);
    labels.resize(m);
    for (int i = 0; i < m; ++i) {
      const double prob_pos = detail::sigmoid(Z.row(i).dot(w));
      labels[i] = rng.uniform() < prob_pos ? 1.0 : -1.0;
    }
  }
  const auto m = static_cast<double>(Z.rows());
  const double ridge = spec.ridge;
  // Rows scaled by their labels: margin_i = <b_i z_i, x>.
  const Matrix S = labels.asDiagonal() * Z;

  ZooProblem prob;
  prob.name = "logistic";
  prob.objective.smooth_value = [S, m, ridge](const Vector& x) {
    const Vector margin = S * x;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < margin.size(); ++i) sum += detail::log1pexp(-margin[i]);
    return sum / m + 0.5 * ridge * x.squaredNorm();
  };
  prob.objective.smooth_grad = [S, m, ridge](const Vector& x) -> Vector {
    const Vector margin = S * x;
    Vector w(margin.size());
    for (Eigen::Index i = 0; i < margin.size(); ++i) w[i] = -detail::sigmoid(-margin[i]);
    return S.transpose() * w / m + ridge * x;
  };
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    const Vector s = S.row(i).transpose();
    prob.components.push_back([s, ridge](const Vector& x) -> Vector {
      return -detail::sigmoid(-s.dot(x)) * s + ridge * x;
    });
  }
  prob.objective.h = HTerm::zero();
  Eigen::SelfAdjointEigenSolver<Matrix> es(S.transpose() * S);
  prob.objective.smoothness.L = es.eigenvalues().maxCoeff() / (4.0 * m) + ridge;
  prob.objective.smoothness.mu = ridge;
  const Vector y0 = Vector::Zero(n);
  prob.setup = ProxSetup::euclidean(y0);

  // Reference optimum by damped Newton; the objective is smooth and strongly convex.
  Vector x = y0;
  for (int it = 0; it < 200; ++it) {
    const Vector margin = S * x;
    Vector w(margin.size()), curv(margin.size());
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      const double s = detail::sigmoid(-margin[i]);
      w[i] = -s;
      curv[i] = s * (1.0 - s);
    }
    const Vector g = S.transpose() * w / m + ridge * x;
    if (g.norm() <= 1e-14) break;
    const Matrix Hs = S.transpose() * curv.asDiagonal() * S / m + ridge * Matrix::Identity(n, n);
    const Vector step = Hs.ldlt().solve(g);
    double t = 1.0;
    const double f0 = prob.objective.smooth_value(x);
    while (t > 1e-10 && prob.objective.smooth_value(x - t * step) > f0 - 0.25 * t * g.dot(step)) t *= 0.5;
    x -= t * step;
  }
  prob.objective.known_optimum = KnownOptimum{x, prob.objective.F(x)};
  prob.optimum_policy = OptimumPolicy::precompute_by_long_run;
  prob.R_sq = bregman_divergence(prob.setup, x, y0);
  prob.description = describe_kind(ProblemKind::logistic);
  detail::check_gradient(prob.objective, y0, CounterRng(spec.seed, 0xFD), 1.0);
  return prob;
}

inline ZooProblem make_simplex_linear(const ProblemSpec& spec) {
  const int n = spec.costs ? static_cast<int>(spec.costs->size()) : spec.dimension;
  if (n < 1) throw ConfigError("simplex_linear: dimension must be >= 1");
  CounterRng rng(spec.seed, 0x5137);
  Vector c(n);
  if (spec.costs) c = *spec.costs;
  else
    for (int i = 0; i < n; ++i) c[i] = rng.uniform();

  ZooProblem prob;
  prob.name = "simplex_linear";
  prob.objective.smooth_value = [c](const Vector& x) { return c.dot(x); };
  prob.objective.smooth_grad = [c](const Vector&) -> Vector { return c; };
  prob.objective.h = HTerm::zero();
  // A linear function is L-smooth for every L > 0; 1 is the nominal choice.
  prob.objective.smoothness.L = 1.0;
  prob.setup = ProxSetup::entropy_simplex(n);
  Eigen::Index best = 0;
  c.minCoeff(&best);
  Vector x_star = Vector::Zero(n);
  x_star[best] = 1.0;
  prob.objective.known_optimum = KnownOptimum{x_star, c[best]};
  prob.optimum_policy = OptimumPolicy::analytic;
  prob.R_sq = bregman_divergence(prob.setup, x_star, prob.setup.center());
  prob.description = describe_kind(ProblemKind::simplex_linear);
  return prob;
}

inline ZooProblem make_problem(const ProblemSpec& spec) {
  switch (spec.kind) {
    case ProblemKind::quadratic: return make_quadratic(spec);
    case ProblemKind::lasso: return make_lasso(spec);
    case ProblemKind::holder_norm_power: return make_holder_norm_power(spec);
    case ProblemKind::logistic: return make_logistic(spec);
    case ProblemKind::simplex_linear: return make_simplex_linear(spec);
  }
  throw ConfigError("unknown problem kind");
}

}  // namespace triangle_opt::bench
