// Command line front end: run experiments, check traces against bounds, browse the zoo.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "triangle_opt/bench/bounds.hpp"
#include "triangle_opt/bench/experiment.hpp"
#include "triangle_opt/bench/trace_io.hpp"
#include "triangle_opt/bench/zoo.hpp"

namespace to = triangle_opt;
namespace tb = triangle_opt::bench;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

int do_solve(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  tb::Experiment exp = tb::load_experiment(tb::read_text_file(config_path));
  if (seed) exp.seeds = {*seed};

  std::optional<std::filesystem::path> single_file;
  if (out) {
    const std::filesystem::path p(*out);
    if (p.extension() == ".csv" || p.extension() == ".json") {
      if (exp.seeds.size() != 1) throw to::ConfigError("--out names a file but the experiment has several seeds");
      single_file = p;
      exp.format = p.extension() == ".csv" ? tb::TraceFormat::csv : tb::TraceFormat::json;
      exp.output.reset();
    } else {
      exp.output = p;
    }
  }

  const tb::ExperimentResult result = tb::run_experiment(exp);
  bool ok = true;
  for (const auto& s : result.seeds) {
    if (!s.ok()) {
      std::cerr << "seed " << s.seed << ": error: " << s.error << '\n';
      ok = false;
      continue;
    }
    const auto& rep = *s.report;
    if (single_file) tb::emit_trace(rep.trace, *single_file, exp.format);
    std::cout << "seed " << s.seed << ": iterations " << rep.iterations << ", f " << rep.total_f_calls << ", grad "
              << rep.total_grad_calls << ", stoch " << rep.total_stoch_calls;
    if (!rep.trace.empty() && rep.trace.back().gap) std::cout << ", gap " << *rep.trace.back().gap;
    if (rep.certified_gap) std::cout << ", certified " << *rep.certified_gap;
    if (single_file) std::cout << " -> " << single_file->string();
    else if (s.written) std::cout << " -> " << s.written->string();
    std::cout << '\n';
  }
  return ok ? kExitPass : kExitError;
}

int do_check(const std::string& trace_path, const std::string& theorem_id, const tb::BoundParams& params) {
  const auto theorem = tb::parse_theorem(theorem_id);
  if (!theorem) throw to::ConfigError("unknown theorem id '" + theorem_id + "'");
  const to::Trace trace = tb::load_trace(trace_path);
  const tb::Verdict verdict = tb::check_bounds(trace, *theorem, params);
  std::cout << verdict.table();
  return verdict.passed() ? kExitPass : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"triangle_opt: similar-triangles methods, experiments and bound checks"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "run an experiment config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  solve->add_option("--config", config_path, "experiment JSON")->required();
  solve->add_option("--seed", seed, "run this seed only");
  solve->add_option("--out", out, "output directory, or a .csv/.json file for a single seed");

  auto* check = app.add_subcommand("check", "check a trace against a bound");
  std::string trace_path, theorem_id;
  tb::BoundParams params;
  std::optional<double> mu, D, L0, epsilon, R_tilde2, nu, L_nu, tol;
  check->add_option("--trace", trace_path, "trace file (csv or json)")->required();
  check->add_option("--theorem", theorem_id, "t1|t2_t3|c1|c2|t6_work|t9_scaling|t10_calls|t5_halving")->required();
  check->add_option("--L", params.L, "Lipschitz constant")->required();
  check->add_option("--R2", params.R2, "bound on V(x*, y0)")->required();
  check->add_option("--mu", mu);
  check->add_option("--D", D);
  check->add_option("--L0", L0);
  check->add_option("--epsilon", epsilon);
  check->add_option("--R-tilde2", R_tilde2);
  check->add_option("--nu", nu);
  check->add_option("--L-nu", L_nu);
  check->add_option("--omega-tilde", params.omega_tilde);
  check->add_option("--tolerance", tol);

  auto* zoo = app.add_subcommand("zoo", "list or describe problem kinds");
  zoo->require_subcommand(1);
  zoo->add_subcommand("list", "list problem kinds");
  auto* describe = zoo->add_subcommand("describe", "describe one kind");
  std::string kind;
  describe->add_option("kind", kind)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    if (*solve) return do_solve(config_path, seed, out);
    if (*check) {
      params.mu = mu;
      params.D = D;
      params.L0 = L0;
      params.epsilon = epsilon;
      params.R_tilde2 = R_tilde2;
      params.nu = nu;
      params.L_nu = L_nu;
      params.tolerance = tol;
      return do_check(trace_path, theorem_id, params);
    }
    if (zoo->got_subcommand("list")) {
      for (const auto& k : tb::problem_kinds()) std::cout << k << '\n';
      return kExitPass;
    }
    const auto pk = tb::parse_problem_kind(kind);
    if (!pk) {
      std::cerr << "unknown problem kind '" << kind << "'\n";
      return kExitError;
    }
    std::cout << tb::describe_kind(*pk) << '\n';
    return kExitPass;
  } catch (const to::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << '\n';
  } catch (const to::ValidationError& e) {
    std::cerr << "error: " << e.what() << " [field " << e.field() << "]\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kExitError;
}
