#include <catch_amalgamated.hpp>

#include <cmath>

#include "triangle_opt/bench/zoo.hpp"
#include "triangle_opt/oracles.hpp"

using namespace triangle_opt;
using Catch::Approx;

namespace {

CompositeObjective half_sq_norm() {
  CompositeObjective obj;
  obj.smooth_value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  obj.smooth_grad = [](const Vector& x) -> Vector { return x; };
  return obj;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("exact oracles count calls") {
  CompositeObjective obj = half_sq_norm();
  EvalCounter c;
  CHECK(value(obj, vec({3, 4}), c) == 12.5);
  CHECK(grad(obj, vec({3, 4}), c) == vec({3, 4}));
  CHECK(c.f_calls == 1);
  CHECK(c.grad_calls == 1);
  CHECK(c.stochastic_grad_calls == 0);
}

TEST_CASE("oracle rejects undefined values") {
  CompositeObjective obj;
  obj.smooth_value = [](const Vector& x) { return std::log(x[0]) * std::nan(""); };
  obj.smooth_grad = [](const Vector& x) -> Vector { return x * std::nan(""); };
  EvalCounter c;
  CHECK_THROWS_AS(value(obj, vec({1.0}), c), DomainError);
  CHECK_THROWS_AS(grad(obj, vec({1.0}), c), DomainError);
}

TEST_CASE("holder power at the origin and lasso h") {
  bench::ProblemSpec spec;
  spec.kind = bench::ProblemKind::holder_norm_power;
  spec.dimension = 3;
  spec.p = 1.5;
  const auto prob = bench::make_problem(spec);
  EvalCounter c;
  CHECK(value(prob.objective, Vector::Zero(3), c) == 0.0);
  CHECK(grad(prob.objective, Vector::Zero(3), c) == Vector::Zero(3));
  CHECK(HTerm::l1(0.5).value(vec({1, -2})) == 1.5);
}

TEST_CASE("stochastic draws") {
  StochasticGradientOracle none{half_sq_norm(), NoiseModel::none()};
  CounterRng rng(1, 1);
  EvalCounter c;
  CHECK(sample_gradient(none, vec({1, 2}), rng, c) == vec({1, 2}));
  StochasticGradientOracle zero{half_sq_norm(), NoiseModel::gaussian(0.0)};
  CHECK(sample_gradient(zero, vec({1, 2}), rng, c) == vec({1, 2}));
  CHECK(c.stochastic_grad_calls == 2);

  StochasticGradientOracle missing{half_sq_norm(), NoiseModel::gaussian(std::nullopt)};
  CHECK_THROWS_AS(sample_gradient(missing, vec({1, 2}), rng, c), ConfigError);
}

TEST_CASE("gaussian noise has the configured variance and no bias") {
  StochasticGradientOracle o{half_sq_norm(), NoiseModel::gaussian(4.0)};
  CounterRng rng(7, 2);
  EvalCounter c;
  const Vector x = vec({0.3, -1.0});
  const int draws = 100000;
  Vector mean = Vector::Zero(2);
  double sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Vector g = sample_gradient(o, x, rng, c);
    mean += g;
    sq += (g - x).squaredNorm();
  }
  mean /= draws;
  sq /= draws;
  CHECK((mean - x).norm() <= 4.0 * std::sqrt(4.0 / draws));
  CHECK(sq >= 3.8);
  CHECK(sq <= 4.2);
  CHECK(c.stochastic_grad_calls == draws);
}

TEST_CASE("mini-batch averaging") {
  StochasticGradientOracle o{half_sq_norm(), NoiseModel::gaussian(1.0)};
  const Vector x = vec({1.0, 2.0, 3.0});
  EvalCounter c;
  {
    CounterRng a(5, 9), b(5, 9);
    CHECK(minibatch_gradient(o, x, 1, a, c).isApprox(sample_gradient(o, x, b, c), 1e-14));
  }
  StochasticGradientOracle none{half_sq_norm(), NoiseModel::none()};
  CounterRng rng(3, 3);
  CHECK(minibatch_gradient(none, x, 7, rng, c) == x);
  CHECK_THROWS_AS(minibatch_gradient(o, x, 0, rng, c), ConfigError);

  const int reps = 1000;
  double sq = 0.0;
  for (int r = 0; r < reps; ++r) sq += (minibatch_gradient(o, x, 100, rng, c) - x).squaredNorm();
  sq /= reps;
  CHECK(sq == Approx(0.01).epsilon(0.2));
}

TEST_CASE("finite differences") {
  CompositeObjective obj = half_sq_norm();
  CHECK((finite_difference_gradient(obj, vec({1, -1}), 1e-5) - vec({1, -1})).norm() <= 1e-8);
  CompositeObjective constant;
  constant.smooth_value = [](const Vector&) { return 4.0; };
  CHECK(finite_difference_gradient(constant, vec({1, 2, 3}), 1e-3).norm() == 0.0);
  CompositeObjective linear;
  const Vector c = vec({2, -3, 0.5});
  linear.smooth_value = [c](const Vector& x) { return c.dot(x); };
  CHECK((finite_difference_gradient(linear, vec({0.1, 0.2, 0.3}), 1e-3) - c).norm() <= 1e-10);
}

TEST_CASE("zoo gradients match finite differences") {
  CounterRng rng(77, 1);
  for (const auto& name : bench::problem_kinds()) {
    bench::ProblemSpec spec;
    spec.kind = *bench::parse_problem_kind(name);
    spec.dimension = 6;
    spec.seed = 12;
    const auto prob = bench::make_problem(spec);
    for (int i = 0; i < 100; ++i) {
      Vector x = prob.setup.center() + 0.5 * rng.normal_vector(6);
      const Vector g = prob.objective.smooth_grad(x);
      const Vector fd = finite_difference_gradient(prob.objective, x, 1e-6);
      INFO(name);
      CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("finite-sum decomposition is exact") {
  bench::ProblemSpec spec;
  spec.kind = bench::ProblemKind::logistic;
  spec.dimension = 5;
  spec.samples = 17;
  const auto prob = bench::make_problem(spec);
  CounterRng rng(2, 2);
  for (int i = 0; i < 10; ++i) {
    const Vector x = rng.normal_vector(5);
    Vector sum = Vector::Zero(5);
    for (const auto& part : prob.components) sum += part(x);
    CHECK((sum / static_cast<double>(prob.components.size()) - prob.objective.smooth_grad(x)).norm() <= 1e-10);
  }
}

TEST_CASE("holder probe") {
  CounterRng rng(10, 1);
  const HolderEstimate quad = holder_probe(half_sq_norm(), 500, rng, Vector::Zero(3));
  CHECK(quad.L_nu.back() == Approx(1.0).epsilon(1e-9));

  bench::ProblemSpec spec;
  spec.kind = bench::ProblemKind::holder_norm_power;
  spec.dimension = 3;
  const auto prob = bench::make_problem(spec);
  const HolderEstimate hp = holder_probe(prob.objective, 2000, rng, Vector::Zero(3));
  const double at_half = hp.L_nu[5];
  CHECK(std::isfinite(at_half));
  CHECK(at_half <= std::pow(2.0, 0.5) + 1e-9);
  // Near the origin the nu = 1 ratio grows without bound.
  CHECK(hp.L_nu.back() > at_half);

  CompositeObjective lin;
  lin.smooth_value = [](const Vector& x) { return x.sum(); };
  lin.smooth_grad = [](const Vector& x) -> Vector { return Vector::Ones(x.size()); };
  for (double v : holder_probe(lin, 100, rng, Vector::Zero(3)).L_nu) CHECK(v == 0.0);
}
