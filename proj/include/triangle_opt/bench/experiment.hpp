#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "../errors.hpp"
#include "../oracles.hpp"
#include "../prox_geometry.hpp"
#include "../rng.hpp"
#include "../solvers.hpp"
#include "trace_io.hpp"
#include "zoo.hpp"

namespace triangle_opt::bench {

struct ProxConfig {
  enum class Kind { euclidean, entropy };
  Kind kind = Kind::euclidean;
  FeasibleSet::Kind set = FeasibleSet::Kind::free_space;
  std::optional<Vector> lower, upper;  // box
  double radius = 0.0;                 // ball, centered at the start point
  double omega_tilde = 1.0;
  double omega = 1.0;
  bool given = false;
};

struct NoiseConfig {
  NoiseModel::Kind model = NoiseModel::Kind::none;
  std::optional<double> D;
};

struct Experiment {
  ProblemSpec problem;
  ProxConfig prox;
  SolverConfig solver;
  NoiseConfig noise;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::filesystem::path> output;
  TraceFormat format = TraceFormat::csv;
};

namespace detail {

/// Line of every object key, keyed by its dotted path, plus duplicate detection.
/// nlohmann's parser silently keeps the last duplicate and reports no positions
/// for keys, so the text is scanned once beforehand.
class KeyScan {
 public:
  explicit KeyScan(const std::string& text) { scan(text); }
  int line_of(const std::string& path) const {
    auto it = lines_.find(path);
    return it == lines_.end() ? 0 : it->second;
  }

 private:
  struct Frame {
    bool object;
    std::string path;
    std::set<std::string> keys;
    std::string pending_key;
    int index = 0;
  };

  static std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
  }

  std::string child_path(const Frame& f) const {
    return f.object ? join(f.path, f.pending_key) : f.path + "[" + std::to_string(f.index) + "]";
  }

  void scan(const std::string& text) {
    std::vector<Frame> stack;
    int line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
      } else if (c == '"') {
        std::string s;
        std::size_t j = i + 1;
        for (; j < text.size() && text[j] != '"'; ++j) {
          if (text[j] == '\\' && j + 1 < text.size()) s += text[j++];
          if (text[j] == '\n') ++line;
          s += text[j];
        }
        i = j;
        std::size_t k = j + 1;
        while (k < text.size() && (text[k] == ' ' || text[k] == '\t' || text[k] == '\r' || text[k] == '\n')) ++k;
        if (k < text.size() && text[k] == ':' && !stack.empty() && stack.back().object) {
          Frame& f = stack.back();
          const std::string path = join(f.path, s);
          if (!f.keys.insert(s).second) throw ParseError("duplicate key '" + path + "' at line " + std::to_string(line), line, path);
          f.pending_key = s;
          lines_.emplace(path, line);
        }
      } else if (c == '{' || c == '[') {
        std::string path = stack.empty() ? std::string() : child_path(stack.back());
        stack.push_back({c == '{', path, {}, {}, 0});
      } else if (c == '}' || c == ']') {
        if (!stack.empty()) stack.pop_back();
      } else if (c == ',' && !stack.empty() && !stack.back().object) {
        ++stack.back().index;
      }
    }
  }

  std::map<std::string, int> lines_;
};

class Reader {
 public:
  explicit Reader(const KeyScan& scan) : scan_(scan) {}

  void allow(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail_type(path, "an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
        const std::string p = path.empty() ? it.key() : path + "." + it.key();
        throw ParseError("unknown key '" + p + "'", scan_.line_of(p), p);
      }
    }
  }

  double number(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail_type(join(path, key), "a number");
    return v.get<double>();
  }

  std::optional<double> opt_number(const nlohmann::json& obj, const std::string& path, const char* key) const {
    if (!obj.contains(key)) return std::nullopt;
    return number(obj, path, key);
  }

  std::int64_t integer(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail_type(join(path, key), "an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail_type(join(path, key), "a string");
    return v.get<std::string>();
  }

  bool boolean(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail_type(join(path, key), "a boolean");
    return v.get<bool>();
  }

  Vector vector(const nlohmann::json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    const std::string p = join(path, key);
    if (!v.is_array()) fail_type(p, "an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail_type(p, "an array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  [[noreturn]] void fail_type(const std::string& path, const char* expected) const {
    throw ParseError("field '" + path + "' must be " + expected, scan_.line_of(path), path);
  }

  static std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
  }

 private:
  const KeyScan& scan_;
};

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace detail

/// Parses and validates an experiment description.
inline Experiment load_experiment(const std::string& config_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::parse_error& e) {
    const int line = e.byte > 0 ? detail::line_of_offset(config_text, e.byte - 1) : 0;
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), line);
  }
  const detail::KeyScan scan(config_text);
  const detail::Reader rd(scan);
  rd.allow(doc, "", {"problem", "prox", "solver", "noise", "epsilon", "seeds", "max_iters", "output", "format"});

  Experiment exp;
  try {
    if (!doc.contains("problem")) throw ValidationError("config needs a 'problem' section", "problem");
    if (!doc.contains("solver")) throw ValidationError("config needs a 'solver' section", "solver");

    // problem
    const auto& pj = doc.at("problem");
    rd.allow(pj, "problem",
             {"kind", "dimension", "seed", "L", "mu", "offset", "centered", "start_distance", "samples", "lambda",
              "ridge", "p", "costs"});
    if (!pj.contains("kind")) throw ValidationError("problem needs a 'kind'", "problem.kind");
    const std::string kind = rd.string(pj, "problem", "kind");
    const auto pk = parse_problem_kind(kind);
    if (!pk) throw ValidationError("unknown problem kind '" + kind + "'", "problem.kind");
    ProblemSpec& ps = exp.problem;
    ps.kind = *pk;
    if (pj.contains("dimension")) ps.dimension = static_cast<int>(rd.integer(pj, "problem", "dimension"));
    if (pj.contains("seed")) ps.seed = static_cast<std::uint64_t>(rd.integer(pj, "problem", "seed"));
    if (pj.contains("L")) ps.L = rd.number(pj, "problem", "L");
    if (pj.contains("mu")) ps.mu = rd.number(pj, "problem", "mu");
    if (pj.contains("offset")) ps.offset = rd.number(pj, "problem", "offset");
    if (pj.contains("centered")) ps.centered = rd.boolean(pj, "problem", "centered");
    if (pj.contains("start_distance")) ps.start_distance = rd.number(pj, "problem", "start_distance");
    if (pj.contains("samples")) ps.samples = static_cast<int>(rd.integer(pj, "problem", "samples"));
    if (pj.contains("lambda")) ps.lambda = rd.number(pj, "problem", "lambda");
    if (pj.contains("ridge")) ps.ridge = rd.number(pj, "problem", "ridge");
    if (pj.contains("p")) ps.p = rd.number(pj, "problem", "p");
    if (pj.contains("costs")) ps.costs = rd.vector(pj, "problem", "costs");
    if (ps.dimension < 1) throw ValidationError("problem.dimension must be >= 1", "problem.dimension");

    // prox
    if (doc.contains("prox")) {
      const auto& xj = doc.at("prox");
      rd.allow(xj, "prox", {"kind", "set", "lower", "upper", "radius", "omega_tilde", "omega"});
      ProxConfig& pc = exp.prox;
      pc.given = true;
      if (xj.contains("kind")) {
        const std::string k = rd.string(xj, "prox", "kind");
        if (k == "euclidean") pc.kind = ProxConfig::Kind::euclidean;
        else if (k == "entropy") pc.kind = ProxConfig::Kind::entropy;
        else throw ValidationError("unknown prox kind '" + k + "'", "prox.kind");
      }
      if (xj.contains("set")) {
        const std::string s = rd.string(xj, "prox", "set");
        if (s == "free") pc.set = FeasibleSet::Kind::free_space;
        else if (s == "box") pc.set = FeasibleSet::Kind::box;
        else if (s == "simplex") pc.set = FeasibleSet::Kind::simplex;
        else if (s == "ball") pc.set = FeasibleSet::Kind::euclidean_ball;
        else throw ValidationError("unknown feasible set '" + s + "'", "prox.set");
      } else if (pc.kind == ProxConfig::Kind::entropy) {
        pc.set = FeasibleSet::Kind::simplex;
      }
      if (xj.contains("lower")) pc.lower = rd.vector(xj, "prox", "lower");
      if (xj.contains("upper")) pc.upper = rd.vector(xj, "prox", "upper");
      if (xj.contains("radius")) pc.radius = rd.number(xj, "prox", "radius");
      if (xj.contains("omega_tilde")) pc.omega_tilde = rd.number(xj, "prox", "omega_tilde");
      if (xj.contains("omega")) pc.omega = rd.number(xj, "prox", "omega");
      if (pc.kind == ProxConfig::Kind::entropy && pc.set != FeasibleSet::Kind::simplex)
        throw ValidationError("the entropy prox lives on the simplex", "prox.set");
      if (pc.set == FeasibleSet::Kind::box && (!pc.lower || !pc.upper))
        throw ValidationError("a box needs 'lower' and 'upper'", pc.lower ? "prox.upper" : "prox.lower");
      if (pc.set == FeasibleSet::Kind::euclidean_ball && !(pc.radius > 0.0))
        throw ValidationError("a ball needs a positive 'radius'", "prox.radius");
      if (!(pc.omega_tilde >= 1.0)) throw ValidationError("omega_tilde must be >= 1", "prox.omega_tilde");
      if (!(pc.omega >= 1.0)) throw ValidationError("omega must be >= 1", "prox.omega");
    }

    // top-level scalars
    if (doc.contains("epsilon")) exp.solver.epsilon = rd.number(doc, "", "epsilon");
    if (doc.contains("max_iters")) {
      const auto mi = rd.integer(doc, "", "max_iters");
      if (mi < 1) throw ValidationError("max_iters must be >= 1", "max_iters");
      exp.solver.max_iters = static_cast<int>(mi);
    }
    if (doc.contains("seeds")) {
      const auto& sj = doc.at("seeds");
      if (!sj.is_array() || sj.empty()) rd.fail_type("seeds", "a non-empty array of integers");
      exp.seeds.clear();
      for (const auto& s : sj) {
        if (!s.is_number_integer()) rd.fail_type("seeds", "a non-empty array of integers");
        exp.seeds.push_back(s.get<std::uint64_t>());
      }
    }
    if (doc.contains("output")) exp.output = std::filesystem::path(rd.string(doc, "", "output"));
    if (doc.contains("format")) {
      const std::string f = rd.string(doc, "", "format");
      if (f == "csv") exp.format = TraceFormat::csv;
      else if (f == "json") exp.format = TraceFormat::json;
      else throw ValidationError("format must be csv or json", "format");
    }

    // noise
    if (doc.contains("noise")) {
      const auto& nj = doc.at("noise");
      rd.allow(nj, "noise", {"model", "D"});
      if (nj.contains("model")) {
        const std::string m = rd.string(nj, "noise", "model");
        if (m == "none") exp.noise.model = NoiseModel::Kind::none;
        else if (m == "gaussian") exp.noise.model = NoiseModel::Kind::gaussian;
        else if (m == "finite_sum") exp.noise.model = NoiseModel::Kind::finite_sum;
        else throw ValidationError("unknown noise model '" + m + "'", "noise.model");
      }
      exp.noise.D = rd.opt_number(nj, "noise", "D");
    }

    // solver
    const auto& sj = doc.at("solver");
    rd.allow(sj, "solver", {"mode", "L", "L0", "mu", "omega_tilde", "D", "max_backtracks", "stopping"});
    if (!sj.contains("mode")) throw ValidationError("solver needs a 'mode'", "solver.mode");
    const std::string mode = rd.string(sj, "solver", "mode");
    const auto md = parse_mode(mode);
    if (!md) throw ValidationError("unknown solver mode '" + mode + "'", "solver.mode");
    SolverConfig& sc = exp.solver;
    sc.mode = *md;
    sc.L_known = rd.opt_number(sj, "solver", "L");
    if (sj.contains("L0")) sc.L0 = rd.number(sj, "solver", "L0");
    if (sj.contains("mu")) sc.mu = rd.number(sj, "solver", "mu");
    sc.omega_tilde = rd.opt_number(sj, "solver", "omega_tilde");
    sc.D = rd.opt_number(sj, "solver", "D");
    if (!sc.D) sc.D = exp.noise.D;
    if (sj.contains("max_backtracks")) sc.max_backtracks_per_iter = static_cast<int>(rd.integer(sj, "solver", "max_backtracks"));
    if (sj.contains("stopping")) {
      const auto& tj = sj.at("stopping");
      rd.allow(tj, "solver.stopping", {"kind", "threshold", "R2"});
      const std::string k = tj.contains("kind") ? rd.string(tj, "solver.stopping", "kind") : "iterations_only";
      if (k == "iterations_only") {
        sc.stopping = Stopping::iterations_only();
      } else if (k == "gradient_mapping") {
        if (!tj.contains("threshold"))
          throw ValidationError("gradient_mapping stopping needs 'threshold'", "solver.stopping.threshold");
        sc.stopping = Stopping::gradient_mapping(rd.number(tj, "solver.stopping", "threshold"));
      } else if (k == "certified_gap") {
        sc.stopping = Stopping::certified_gap();
      } else {
        throw ValidationError("unknown stopping kind '" + k + "'", "solver.stopping.kind");
      }
      sc.R_sq = rd.opt_number(tj, "solver.stopping", "R2");
    }

    // cross-field checks
    if (sc.mode == Mode::mst_exact_L && !sc.L_known) throw ValidationError("mst mode needs solver.L", "L");
    if ((sc.mode == Mode::umst_universal || sc.mode == Mode::sumst_stochastic_universal) && !(sc.epsilon > 0.0))
      throw ValidationError(to_string(sc.mode) + " mode needs epsilon > 0", "epsilon");
    if (sc.mode == Mode::sumst_stochastic_universal && !sc.D)
      throw ValidationError("sumst mode needs the variance bound D", "D");
    if (exp.noise.model != NoiseModel::Kind::none && sc.mode != Mode::sumst_stochastic_universal)
      throw ValidationError("stochastic noise requires sumst mode", "noise.model");
    if (exp.noise.model == NoiseModel::Kind::finite_sum && ps.kind != ProblemKind::logistic)
      throw ValidationError("finite_sum noise is available for the logistic problem only", "noise.model");
    if (sc.stopping.kind == Stopping::Kind::certified_gap && !(sc.epsilon > 0.0))
      throw ValidationError("certified_gap stopping needs epsilon > 0", "epsilon");
    if (exp.prox.given && (exp.prox.kind == ProxConfig::Kind::entropy) != (ps.kind == ProblemKind::simplex_linear))
      throw ValidationError("simplex_linear runs with the entropy prox, the other problems with the euclidean one",
                            "prox.kind");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return exp;
}

/// Problem instance with the configured geometry applied.
struct BuiltExperiment {
  ZooProblem problem;
  ProxSetup setup = ProxSetup::euclidean(Vector::Zero(1));
  std::optional<StochasticGradientOracle> oracle;
  SolverConfig solver;
};

inline BuiltExperiment build_experiment(const Experiment& exp) {
  BuiltExperiment b{make_problem(exp.problem)};
  ProxSetup setup = b.problem.setup;
  const ProxConfig& pc = exp.prox;
  if (pc.kind == ProxConfig::Kind::euclidean && pc.set != FeasibleSet::Kind::free_space) {
    const Vector& y0 = setup.center();
    FeasibleSet set;
    switch (pc.set) {
      case FeasibleSet::Kind::box:
        if (pc.lower->size() != y0.size() || pc.upper->size() != y0.size())
          throw ValidationError("box bounds must match the problem dimension", "prox.lower");
        set = FeasibleSet::box(*pc.lower, *pc.upper);
        break;
      case FeasibleSet::Kind::euclidean_ball: set = FeasibleSet::ball(y0, pc.radius); break;
      case FeasibleSet::Kind::simplex: set = FeasibleSet::simplex(); break;
      case FeasibleSet::Kind::free_space: break;
    }
    setup = ProxSetup::euclidean(set.project(y0), set);
    // The zoo optimum refers to the unconstrained problem.
    b.problem.objective.known_optimum.reset();
    b.problem.R_sq.reset();
    b.problem.optimum_policy = OptimumPolicy::none;
  }
  b.setup = setup.with_omegas(pc.omega_tilde, pc.omega);
  b.solver = exp.solver;
  if (b.solver.stopping.kind == Stopping::Kind::certified_gap && !b.solver.R_sq) {
    if (!b.problem.R_sq) throw ValidationError("certified_gap stopping needs R2 for this problem", "solver.stopping.R2");
    b.solver.R_sq = b.problem.R_sq;
  }
  if (exp.solver.mode == Mode::sumst_stochastic_universal) {
    StochasticGradientOracle o{b.problem.objective, NoiseModel::none()};
    switch (exp.noise.model) {
      case NoiseModel::Kind::none: o.noise.D = exp.solver.D; break;
      case NoiseModel::Kind::gaussian: o.noise = NoiseModel::gaussian(exp.noise.D ? exp.noise.D : exp.solver.D); break;
      case NoiseModel::Kind::finite_sum:
        o.noise = NoiseModel::finite_sum(b.problem.components, exp.noise.D ? exp.noise.D : exp.solver.D);
        break;
    }
    b.oracle = std::move(o);
  }
  return b;
}

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<RunReport> report;
  std::optional<std::filesystem::path> written;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;

  bool all_ok() const {
    return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok(); });
  }
};

inline std::string trace_file_name(std::uint64_t seed, TraceFormat format) {
  return "trace_seed_" + std::to_string(seed) + (format == TraceFormat::csv ? ".csv" : ".json");
}

/// Worker count: hardware threads, capped by TRIANGLE_OPT_THREADS when set.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TRIANGLE_OPT_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

inline SeedResult run_one_seed(const BuiltExperiment& b, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  try {
    const CounterRng rng(seed, 0);
    if (b.oracle) r.report = run(*b.oracle, b.setup, b.solver, rng);
    else r.report = run(b.problem.objective, b.setup, b.solver, rng);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

/// One run per seed. Solver failures are recorded per seed and do not stop the batch.
inline ExperimentResult run_experiment(const Experiment& exp) {
  const BuiltExperiment built = build_experiment(exp);
  ExperimentResult result;
  result.seeds.resize(exp.seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < exp.seeds.size(); i = next++) {
      SeedResult r = run_one_seed(built, exp.seeds[i]);
      if (r.ok() && exp.output) {
        try {
          const auto path = *exp.output / trace_file_name(r.seed, exp.format);
          emit_trace(r.report->trace, path, exp.format);
          r.written = path;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
      result.seeds[i] = std::move(r);
    }
  };
  const unsigned workers = worker_count(exp.seeds.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return result;
}

}  // namespace triangle_opt::bench
