#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>

#include "triangle_opt/bench/bounds.hpp"
#include "triangle_opt/bench/experiment.hpp"
#include "triangle_opt/bench/trace_io.hpp"
#include "triangle_opt/bench/zoo.hpp"

using namespace triangle_opt;
using namespace triangle_opt::bench;

namespace {

const char* kQuadraticConfig = R"({
  "problem": {"kind": "quadratic", "dimension": 50, "seed": 11, "L": 1.0},
  "solver": {"mode": "mst", "L": 1.0},
  "seeds": [1],
  "max_iters": 10
})";

template <class E>
E thrown_by(const std::string& text) {
  try {
    load_experiment(text);
  } catch (const E& e) {
    return e;
  }
  FAIL("expected an exception");
  throw;
}

Trace quadratic_trace(int iters) {
  Experiment exp = load_experiment(kQuadraticConfig);
  exp.solver.max_iters = iters;
  return run_experiment(exp).seeds[0].report->trace;
}

}  // namespace

TEST_CASE("load_experiment happy path") {
  const Experiment exp = load_experiment(kQuadraticConfig);
  CHECK(exp.problem.kind == ProblemKind::quadratic);
  CHECK(exp.problem.dimension == 50);
  CHECK(exp.solver.mode == Mode::mst_exact_L);
  CHECK(*exp.solver.L_known == 1.0);
  CHECK(exp.solver.max_iters == 10);
  CHECK(exp.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("load_experiment validation") {
  const auto missing_d = thrown_by<ValidationError>(R"({
    "problem": {"kind": "quadratic"},
    "solver": {"mode": "sumst"},
    "noise": {"model": "gaussian"},
    "epsilon": 0.1
  })");
  CHECK(missing_d.field() == "D");

  CHECK(thrown_by<ValidationError>(R"({"problem": {"kind": "quadratic"}, "solver": {"mode": "mst"}})").field() == "L");
  CHECK(thrown_by<ValidationError>(R"({"problem": {"kind": "quadratic"}, "solver": {"mode": "umst"}})").field() ==
        "epsilon");
  CHECK_THROWS_AS(load_experiment(R"({"solver": {"mode": "amst"}})"), ValidationError);

  const auto dup = thrown_by<ParseError>("{\n  \"problem\": {\"kind\": \"quadratic\"},\n  \"solver\": {\"mode\": \"mst\",\n"
                                         "  \"L\": 1, \"L\": 2}\n}");
  CHECK(dup.line() == 4);
  CHECK(dup.field() == "solver.L");

  const auto unknown = thrown_by<ParseError>(R"({"problem": {"kind": "quadratic", "dimesion": 4}, "solver": {"mode": "amst"}})");
  CHECK(unknown.field().find("dimesion") != std::string::npos);

  CHECK_THROWS_AS(load_experiment(R"({"problem": {"kind": "quadratic", "dimension": "four"}, "solver": {"mode": "amst"}})"),
                  ParseError);
  CHECK_THROWS_AS(load_experiment("{ not json"), ParseError);
}

TEST_CASE("run_experiment writes one trace per seed") {
  const auto dir = std::filesystem::temp_directory_path() / "triangle_opt_bench_test";
  std::filesystem::remove_all(dir);
  Experiment exp = load_experiment(kQuadraticConfig);
  exp.seeds = {1, 2, 3};
  exp.output = dir;
  const ExperimentResult res = run_experiment(exp);
  REQUIRE(res.all_ok());
  for (const auto& s : res.seeds) {
    REQUIRE(s.written);
    const Trace t = load_trace(*s.written);
    CHECK(t.size() == 10);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.rows[i].k == static_cast<std::int64_t>(i));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("seeded runs are deterministic and sumst batches vary across seeds") {
  const std::string cfg = R"({
    "problem": {"kind": "quadratic", "dimension": 10, "seed": 2},
    "solver": {"mode": "sumst", "L0": 1.0},
    "noise": {"model": "gaussian", "D": 1.0},
    "epsilon": 0.05,
    "max_iters": 30
  })";
  Experiment exp = load_experiment(cfg);
  for (std::uint64_t s = 0; s < 20; ++s) exp.seeds.push_back(s);
  const ExperimentResult a = run_experiment(exp), b = run_experiment(exp);
  REQUIRE(a.all_ok());
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < a.seeds.size(); ++i) {
    CHECK(trace_to_csv(a.seeds[i].report->trace) == trace_to_csv(b.seeds[i].report->trace));
    distinct.insert(trace_to_csv(a.seeds[i].report->trace));
  }
  CHECK(distinct.size() > 1);
}

TEST_CASE("failures are reported per seed") {
  Experiment exp = load_experiment(R"({
    "problem": {"kind": "quadratic", "dimension": 5},
    "solver": {"mode": "amst", "L0": 1e-12, "max_backtracks": 3},
    "seeds": [1, 2]
  })");
  const ExperimentResult res = run_experiment(exp);
  CHECK_FALSE(res.all_ok());
  for (const auto& s : res.seeds) CHECK(s.error.find("backtracking") != std::string::npos);
}

TEST_CASE("check_bounds on a clean trace and on mutations") {
  const auto prob = make_problem(load_experiment(kQuadraticConfig).problem);
  BoundParams p;
  p.L = 1.0;
  p.R2 = *prob.R_sq;
  const Trace full = quadratic_trace(200);
  CHECK(check_bounds(full, Theorem::t1, p).passed());

  Trace truncated = full;
  truncated.rows.resize(1);
  CHECK(check_bounds(truncated, Theorem::t1, p).passed());
  CHECK(check_bounds(Trace{}, Theorem::t1, p).passed());
  CHECK(check_bounds(Trace{}, Theorem::t1, p).worst_margin == 0.0);

  Trace bad = full;
  bad.rows[57].gap = 10.0 * convex_rate_bound(1.0, p.R2, 57);
  const Verdict v = check_bounds(bad, Theorem::t1, p);
  CHECK_FALSE(v.passed());
  CHECK(v.failing_k == std::vector<std::int64_t>{57});
  CHECK(v.worst_margin < 0.0);
  CHECK(v.table().find("FAIL") != std::string::npos);

  p.R_tilde2 = 4.0;
  // The file formats carry no distance columns.
  CHECK_THROWS_AS(check_bounds(trace_from_csv(trace_to_csv(full)), Theorem::c1, p), MissingColumn);
  CHECK_THROWS_AS(check_bounds(full, Theorem::t2_t3, p), ConfigError);
}

TEST_CASE("trace round trips") {
  Trace t = quadratic_trace(25);
  t.rows[3].gap.reset();
  t.rows[4].alpha = 1.0 / 3.0;
  for (const Trace& back : {trace_from_csv(trace_to_csv(t)), trace_from_json(trace_to_json(t))}) {
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const TraceRow &a = t.rows[i], &b = back.rows[i];
      CHECK(a.k == b.k);
      CHECK(a.A == b.A);
      CHECK(a.alpha == b.alpha);
      CHECK(a.L_trial == b.L_trial);
      CHECK(a.j == b.j);
      CHECK(a.m == b.m);
      CHECK(a.cum_f == b.cum_f);
      CHECK(a.cum_grad == b.cum_grad);
      CHECK(a.cum_stoch == b.cum_stoch);
      CHECK(a.gap == b.gap);
    }
  }
  CHECK(trace_to_csv(Trace{}) == std::string(kTraceHeader) + "\n");
  CHECK(trace_from_csv(trace_to_csv(Trace{})).empty());
  CHECK(trace_from_json(trace_to_json(Trace{})).empty());
}

TEST_CASE("malformed traces") {
  CHECK_THROWS_AS(trace_from_csv("k,A\n0,1\n"), ParseError);
  try {
    trace_from_csv(std::string(kTraceHeader) + "\n0,1,1,1,0,0,1,1,0,0.5\n1,2,1,1,0,0,x,2,0,0.3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "cum_f");
  }
  CHECK_THROWS_AS(trace_from_json("{}"), ParseError);
  CHECK_THROWS_AS(load_trace("/nonexistent/trace.csv"), IoError);
  CHECK(trace_file_name(7, TraceFormat::json) == "trace_seed_7.json");
}

TEST_CASE("zoo optima are stationary") {
  for (const auto& name : problem_kinds()) {
    ProblemSpec spec;
    spec.kind = *parse_problem_kind(name);
    spec.dimension = 8;
    spec.seed = 3;
    const ZooProblem prob = make_problem(spec);
    INFO(name);
    REQUIRE(prob.objective.known_optimum);
    REQUIRE(prob.R_sq);
    const Vector& xs = prob.objective.known_optimum->x;
    CHECK(prob.objective.F(xs) == Catch::Approx(prob.objective.known_optimum->F).margin(1e-12));
    CHECK(gradient_mapping_residual(prob.objective, prob.setup, xs, 1.0) <= 1e-8);
    CHECK(*prob.R_sq == Catch::Approx(bregman_divergence(prob.setup, xs, prob.setup.center())).margin(1e-12));
    CHECK_FALSE(prob.description.empty());
  }
  CHECK_FALSE(parse_problem_kind("cubic"));
}

TEST_CASE("work and call bounds on solver traces") {
  const auto prob = make_problem(load_experiment(kQuadraticConfig).problem);
  Experiment exp = load_experiment(kQuadraticConfig);
  exp.solver.mode = Mode::amst_adaptive;
  exp.solver.L0 = 1.0 / 16;
  exp.solver.max_iters = 100;
  const Trace t = run_experiment(exp).seeds[0].report->trace;
  BoundParams p;
  p.L = 1.0;
  p.R2 = *prob.R_sq;
  p.L0 = 1.0 / 16;
  CHECK(check_bounds(t, Theorem::t6_work, p).passed());
  CHECK(check_bounds(t, Theorem::t1, p).passed());
  CHECK_THROWS_AS(check_bounds(t, Theorem::t10_calls, p), ConfigError);
  CHECK(fit_slope({0, 1, 2}, {1, 3, 5}) == Catch::Approx(2.0));
  CHECK_THROWS_AS(fit_slope({1}, {1}), ConfigError);
}
