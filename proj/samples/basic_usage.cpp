// Solves a small lasso problem with the adaptive method and prints the trace tail.

#include <iostream>

#include "triangle_opt/triangle_opt.hpp"

using namespace triangle_opt;

int main() {
  bench::ProblemSpec spec;
  spec.kind = bench::ProblemKind::lasso;
  spec.dimension = 30;
  spec.lambda = 0.05;
  spec.seed = 7;
  const bench::ZooProblem problem = bench::make_problem(spec);

  SolverConfig cfg;
  cfg.mode = Mode::amst_adaptive;
  cfg.L0 = 1.0;
  cfg.max_iters = 200;
  cfg.epsilon = 1e-8;
  cfg.R_sq = problem.R_sq;
  cfg.stopping = Stopping::certified_gap();

  const RunReport report = run(problem.objective, problem.setup, cfg);
  std::cout << "iterations " << report.iterations << ", f calls " << report.total_f_calls << ", grad calls "
            << report.total_grad_calls << '\n';
  std::cout << "final gap " << *report.trace.back().gap << ", certified " << *report.certified_gap << '\n';

  std::cout << bench::trace_to_csv(report.trace).substr(0, 400) << "...\n";
  return 0;
}
