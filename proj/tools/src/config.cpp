#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "json.hpp"
#include "vabo/experiment.hpp"
#include "vabo/random.hpp"

namespace vabo::experiment {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string position(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return fmt::format("line {}, column {}", line, column);
}

/// Collects errors while walking the JSON tree.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& key, const std::string& message) { errors.push_back(key + ": " + message); }

  void reject_unknown(const json& object, const std::string& prefix, std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : object.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        errors.push_back(fmt::format("unknown key '{}{}'", prefix, key));
      }
    }
  }

  std::optional<double> number(const json& value, const std::string& key) {
    if (!value.is_number()) {
      fail(key, "expected a number");
      return std::nullopt;
    }
    return value.get<double>();
  }

  std::optional<std::uint64_t> integer(const json& value, const std::string& key, std::uint64_t min) {
    if (!value.is_number_integer() || (!value.is_number_unsigned() && value.get<std::int64_t>() < 0)) {
      fail(key, fmt::format("expected an integer >= {}", min));
      return std::nullopt;
    }
    const auto v = value.get<std::uint64_t>();
    if (v < min) {
      fail(key, fmt::format("expected an integer >= {}, got {}", min, v));
      return std::nullopt;
    }
    return v;
  }

  std::optional<bool> boolean(const json& value, const std::string& key) {
    if (!value.is_boolean()) {
      fail(key, "expected true or false");
      return std::nullopt;
    }
    return value.get<bool>();
  }

  std::optional<std::string> string(const json& value, const std::string& key) {
    if (!value.is_string()) {
      fail(key, "expected a string");
      return std::nullopt;
    }
    return value.get<std::string>();
  }

  bool object(const json& value, const std::string& key) {
    if (!value.is_object()) {
      fail(key, "expected an object");
      return false;
    }
    return true;
  }
};

void read_algorithms(Reader& r, const json& value, ExperimentConfig& c) {
  std::vector<json> items = value.is_array() ? value.get<std::vector<json>>() : std::vector<json>{value};
  if (items.empty()) {
    r.fail("algorithm", "needs at least one entry");
    return;
  }
  std::vector<Algorithm> out;
  for (const auto& item : items) {
    const auto name = r.string(item, "algorithm");
    if (!name) return;
    try {
      const Algorithm a = parse_algorithm(*name);
      if (std::find(out.begin(), out.end(), a) != out.end()) {
        r.fail("algorithm", "'" + *name + "' listed twice");
        return;
      }
      out.push_back(a);
    } catch (const std::invalid_argument& e) {
      r.fail("algorithm", e.what());
      return;
    }
  }
  c.algorithms = std::move(out);
}

void read_budgets(Reader& r, const json& value, ExperimentConfig& c) {
  if (!value.is_array() || value.empty()) {
    r.fail("budgets", "expected a non-empty list of numbers >= 0 or \"inf\"");
    return;
  }
  std::vector<double> out;
  for (const auto& item : value) {
    double b = 0.0;
    if (item.is_string() && (item == "inf" || item == "infinity")) {
      b = kInfiniteBudget;
    } else if (item.is_number()) {
      b = item.get<double>();
    } else {
      r.fail("budgets", "entries must be numbers >= 0 or \"inf\"");
      return;
    }
    if (!(b >= 0.0)) {
      r.fail("budgets", fmt::format("budgets must be nonnegative, got {}", b));
      return;
    }
    if (std::find(out.begin(), out.end(), b) != out.end()) {
      r.fail("budgets", fmt::format("budget {} listed twice", b));
      return;
    }
    out.push_back(b);
  }
  c.budgets = std::move(out);
}

void read_seeds(Reader& r, const json& value, ExperimentConfig& c) {
  if (value.is_number()) {
    const auto n = r.integer(value, "seeds", 1);
    if (!n) return;
    if (*n > 100000) {
      r.fail("seeds", "at most 100000 seeds");
      return;
    }
    c.seeds.resize(*n);
    for (std::uint64_t s = 0; s < *n; ++s) c.seeds[s] = s;
    return;
  }
  if (!value.is_array() || value.empty()) {
    r.fail("seeds", "expected a positive count or a non-empty list of integers >= 0");
    return;
  }
  std::vector<std::uint64_t> out;
  for (const auto& item : value) {
    const auto s = r.integer(item, "seeds", 0);
    if (!s) return;
    if (std::find(out.begin(), out.end(), *s) != out.end()) {
      r.fail("seeds", fmt::format("seed {} listed twice", *s));
      return;
    }
    out.push_back(*s);
  }
  c.seeds = std::move(out);
}

void read_cost(Reader& r, const json& value, ExperimentConfig& c) {
  if (!r.object(value, "cost")) return;
  r.reject_unknown(value, "cost.", {"kind", "scale", "knots"});
  CostSpec spec;
  if (value.contains("kind")) {
    const auto kind = r.string(value["kind"], "cost.kind");
    if (!kind) return;
    if (*kind == "quadratic") {
      spec.kind = ViolationCostFn::Kind::quadratic;
    } else if (*kind == "linear") {
      spec.kind = ViolationCostFn::Kind::linear;
    } else if (*kind == "table") {
      spec.kind = ViolationCostFn::Kind::table;
    } else {
      r.fail("cost.kind", "expected quadratic, linear or table, got '" + *kind + "'");
      return;
    }
  }
  if (value.contains("scale")) {
    if (spec.kind == ViolationCostFn::Kind::table) {
      r.fail("cost.scale", "not used by table costs");
      return;
    }
    const auto scale = r.number(value["scale"], "cost.scale");
    if (!scale) return;
    if (!(*scale > 0.0) || !std::isfinite(*scale)) {
      r.fail("cost.scale", "must be positive");
      return;
    }
    spec.scale = *scale;
  }
  if (value.contains("knots")) {
    if (spec.kind != ViolationCostFn::Kind::table) {
      r.fail("cost.knots", "only used by table costs");
      return;
    }
    const json& knots = value["knots"];
    if (!knots.is_array()) {
      r.fail("cost.knots", "expected a list of [violation, cost] pairs");
      return;
    }
    for (const auto& k : knots) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
        r.fail("cost.knots", "expected a list of [violation, cost] pairs");
        return;
      }
      spec.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
  } else if (spec.kind == ViolationCostFn::Kind::table) {
    r.fail("cost.knots", "required for table costs");
    return;
  }
  try {
    (void)spec.build();
  } catch (const std::invalid_argument& e) {
    r.fail("cost", e.what());
    return;
  }
  c.cost = std::move(spec);
}

void read_solver(Reader& r, const json& value, ExperimentConfig& c) {
  if (!r.object(value, "solver")) return;
  std::string kind = "grid";
  if (value.contains("kind")) {
    const auto k = r.string(value["kind"], "solver.kind");
    if (!k) return;
    kind = *k;
  }
  if (kind == "grid") {
    r.reject_unknown(value, "solver.", {"kind", "resolution"});
    GridSolver grid;
    if (value.contains("resolution")) {
      const json& res = value["resolution"];
      std::vector<json> items = res.is_array() ? res.get<std::vector<json>>() : std::vector<json>{res};
      if (items.empty()) {
        r.fail("solver.resolution", "needs at least one entry");
        return;
      }
      grid.points_per_dimension.clear();
      for (const auto& item : items) {
        const auto n = r.integer(item, "solver.resolution", 2);
        if (!n) return;
        grid.points_per_dimension.push_back(*n);
      }
    }
    c.solver = grid;
  } else if (kind == "multistart") {
    r.reject_unknown(value, "solver.", {"kind", "starts", "local_evaluations"});
    MultistartSolver ms;
    if (value.contains("starts")) {
      const auto n = r.integer(value["starts"], "solver.starts", 1);
      if (!n) return;
      ms.starts = *n;
    }
    if (value.contains("local_evaluations")) {
      const auto n = r.integer(value["local_evaluations"], "solver.local_evaluations", 0);
      if (!n) return;
      ms.local_evaluations = *n;
    }
    c.solver = ms;
  } else {
    r.fail("solver.kind", "expected grid or multistart, got '" + kind + "'");
  }
}

void read_document(Reader& r, const json& doc, ExperimentConfig& c) {
  r.reject_unknown(doc, "",
                   {"problem", "algorithm", "budgets", "iterations", "delta", "beta0", "beta0_per_constraint", "seeds",
                    "cost", "solver", "safe_bo", "gp", "initial_points", "observation_noise_sd", "output_dir"});
  if (doc.contains("problem")) {
    if (auto p = r.string(doc["problem"], "problem")) c.problem = *p;
  }
  if (doc.contains("algorithm")) read_algorithms(r, doc["algorithm"], c);
  if (doc.contains("budgets")) read_budgets(r, doc["budgets"], c);
  if (doc.contains("iterations")) {
    if (auto t = r.integer(doc["iterations"], "iterations", 1)) c.iterations = *t;
  }
  if (doc.contains("delta")) {
    if (auto d = r.number(doc["delta"], "delta")) {
      if (*d > 0.0 && *d < 1.0) {
        c.delta = *d;
      } else {
        r.fail("delta", fmt::format("must lie strictly between 0 and 1, got {}", *d));
      }
    }
  }
  if (doc.contains("beta0")) {
    if (auto b = r.number(doc["beta0"], "beta0")) {
      if (*b > 0.0 && *b <= 1.0) {
        c.beta0 = *b;
      } else {
        r.fail("beta0", fmt::format("must lie in (0, 1], got {}", *b));
      }
    }
  }
  if (doc.contains("beta0_per_constraint")) {
    const json& v = doc["beta0_per_constraint"];
    if (!v.is_array()) {
      r.fail("beta0_per_constraint", "expected a list of numbers in (0, 1]");
    } else {
      std::vector<double> out;
      for (const auto& item : v) {
        auto b = r.number(item, "beta0_per_constraint");
        if (!b) break;
        if (!(*b > 0.0 && *b <= 1.0)) {
          r.fail("beta0_per_constraint", fmt::format("entries must lie in (0, 1], got {}", *b));
          break;
        }
        out.push_back(*b);
      }
      c.beta0_per_constraint = std::move(out);
    }
  }
  if (doc.contains("seeds")) read_seeds(r, doc["seeds"], c);
  if (doc.contains("cost")) read_cost(r, doc["cost"], c);
  if (doc.contains("solver")) read_solver(r, doc["solver"], c);
  if (doc.contains("safe_bo") && r.object(doc["safe_bo"], "safe_bo")) {
    const json& v = doc["safe_bo"];
    r.reject_unknown(v, "safe_bo.", {"confidence_multiplier"});
    if (v.contains("confidence_multiplier")) {
      if (auto m = r.number(v["confidence_multiplier"], "safe_bo.confidence_multiplier")) {
        if (*m > 0.0 && std::isfinite(*m)) {
          c.safe_bo_confidence_multiplier = *m;
        } else {
          r.fail("safe_bo.confidence_multiplier", "must be positive");
        }
      }
    }
  }
  if (doc.contains("gp") && r.object(doc["gp"], "gp")) {
    const json& v = doc["gp"];
    r.reject_unknown(v, "gp.", {"refit_hyperparameters", "noise_variance"});
    if (v.contains("refit_hyperparameters")) {
      if (auto b = r.boolean(v["refit_hyperparameters"], "gp.refit_hyperparameters")) c.refit_hyperparameters = *b;
    }
    if (v.contains("noise_variance")) {
      if (auto n = r.number(v["noise_variance"], "gp.noise_variance")) {
        if (*n >= 0.0 && std::isfinite(*n)) {
          c.gp_noise_variance = *n;
        } else {
          r.fail("gp.noise_variance", "must be >= 0");
        }
      }
    }
  }
  if (doc.contains("initial_points") && r.object(doc["initial_points"], "initial_points")) {
    const json& v = doc["initial_points"];
    r.reject_unknown(v, "initial_points.", {"random"});
    if (v.contains("random")) {
      if (auto k = r.integer(v["random"], "initial_points.random", 0)) c.initial_random_points = *k;
    }
  }
  if (doc.contains("observation_noise_sd")) {
    if (auto sd = r.number(doc["observation_noise_sd"], "observation_noise_sd")) {
      if (*sd >= 0.0 && std::isfinite(*sd)) {
        c.observation_noise_sd = *sd;
      } else {
        r.fail("observation_noise_sd", "must be >= 0");
      }
    }
  }
  if (doc.contains("output_dir")) {
    if (auto dir = r.string(doc["output_dir"], "output_dir")) {
      if (dir->empty()) {
        r.fail("output_dir", "must not be empty");
      } else {
        c.output_dir = *dir;
      }
    }
  }
}

/// Checks that need the problem's dimension and constraint count.
void check_against_problem(Reader& r, const ExperimentConfig& c) {
  std::optional<BlackBoxProblem> problem;
  try {
    problem = make_problem(c.problem);
  } catch (const std::invalid_argument&) {
    r.fail("problem", fmt::format("unknown problem '{}' (available: {})", c.problem, join(problem_names(), ", ")));
    return;
  }
  const std::size_t dim = problem->dimension();
  const std::size_t n = problem->num_constraints();
  if (!c.beta0_per_constraint.empty() && c.beta0_per_constraint.size() != n) {
    r.fail("beta0_per_constraint",
           fmt::format("needs {} entries (one per constraint), got {}", n, c.beta0_per_constraint.size()));
  }
  if (c.solver) {
    if (const auto* grid = std::get_if<GridSolver>(&*c.solver)) {
      const auto& res = grid->points_per_dimension;
      if (res.size() != 1 && res.size() != dim) {
        r.fail("solver.resolution", fmt::format("needs 1 or {} entries, got {}", dim, res.size()));
      } else {
        double nodes = 1.0;
        for (std::size_t d = 0; d < dim; ++d) nodes *= static_cast<double>(res.size() == 1 ? res[0] : res[d]);
        if (nodes > 1e7) r.fail("solver.resolution", fmt::format("grid has {:.0f} nodes; the limit is 1e7", nodes));
      }
    }
  }
  if (problem->metadata().nominal_safe_points.empty()) {
    r.fail("problem", "problem '" + c.problem + "' has no nominal safe point");
  }
}

}  // namespace

ViolationCostFn CostSpec::build() const {
  switch (kind) {
    case ViolationCostFn::Kind::quadratic:
      return ViolationCostFn::quadratic(scale);
    case ViolationCostFn::Kind::linear:
      return ViolationCostFn::linear(scale);
    case ViolationCostFn::Kind::table:
      return ViolationCostFn::table(knots);
  }
  throw std::invalid_argument("unknown cost kind");
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join(errors, "\n")), errors_(std::move(errors)) {}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  const bool blank = std::all_of(text.begin(), text.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
  Reader reader;
  if (!blank) {
    json doc;
    try {
      doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      // e.what() repeats the byte offset; keep only the explanation after it.
      std::string what = e.what();
      const auto colon = what.rfind(": ");
      throw ConfigError({fmt::format("syntax error at {}: {}", position(text, e.byte),
                                     colon == std::string::npos ? what : what.substr(colon + 2))});
    }
    if (!doc.is_object()) throw ConfigError({"the config must be a JSON object"});
    read_document(reader, doc, config);
  }
  check_against_problem(reader, config);
  if (!reader.errors.empty()) throw ConfigError(std::move(reader.errors));
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read config file '" + path.string() + "'"});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string describe(const ExperimentConfig& c) {
  std::vector<std::string> algorithms;
  for (auto a : c.algorithms) algorithms.push_back(to_string(a));
  std::vector<std::string> budgets;
  for (double b : c.budgets) budgets.push_back(format_budget(b));
  std::string solver = "default";
  if (c.solver) {
    if (const auto* grid = std::get_if<GridSolver>(&*c.solver)) {
      solver = fmt::format("grid {}", fmt::join(grid->points_per_dimension, "x"));
    } else {
      const auto& ms = std::get<MultistartSolver>(*c.solver);
      solver = fmt::format("multistart starts={} local_evaluations={}", ms.starts, ms.local_evaluations);
    }
  }
  std::string cost;
  switch (c.cost.kind) {
    case ViolationCostFn::Kind::quadratic:
      cost = fmt::format("quadratic scale={}", c.cost.scale);
      break;
    case ViolationCostFn::Kind::linear:
      cost = fmt::format("linear scale={}", c.cost.scale);
      break;
    case ViolationCostFn::Kind::table:
      cost = fmt::format("table with {} knots", c.cost.knots.size());
      break;
  }
  std::string out;
  out += fmt::format("problem: {}\n", c.problem);
  out += fmt::format("algorithms: {}\n", join(algorithms, ", "));
  out += fmt::format("budgets: {}\n", join(budgets, ", "));
  out += fmt::format("iterations: {}\n", c.iterations);
  out += fmt::format("delta: {}\n", c.delta);
  out += fmt::format("beta0: {}\n", c.beta0);
  if (!c.beta0_per_constraint.empty()) {
    out += fmt::format("beta0_per_constraint: {}\n", fmt::join(c.beta0_per_constraint, ", "));
  }
  out += fmt::format("seeds: {} ({})\n", c.seeds.size(), fmt::join(c.seeds, ", "));
  out += fmt::format("cost: {}\n", cost);
  out += fmt::format("solver: {}\n", solver);
  out += fmt::format("safe_bo.confidence_multiplier: {}\n", c.safe_bo_confidence_multiplier);
  out += fmt::format("gp.refit_hyperparameters: {}\n", c.refit_hyperparameters);
  if (c.gp_noise_variance) out += fmt::format("gp.noise_variance: {}\n", *c.gp_noise_variance);
  out += fmt::format("initial_points.random: {}\n", c.initial_random_points);
  out += fmt::format("observation_noise_sd: {}\n", c.observation_noise_sd);
  if (c.output_dir) out += fmt::format("output_dir: {}\n", *c.output_dir);
  return out;
}

BlackBoxProblem make_campaign_problem(const ExperimentConfig& config, std::uint64_t seed) {
  BlackBoxProblem problem = make_problem(config.problem);
  if (config.observation_noise_sd > 0.0) {
    problem = with_observation_noise(std::move(problem), config.observation_noise_sd, derive_seed({seed, 0x6e6f697365ULL}));
  }
  return problem;
}

VaboConfig make_run_config(const ExperimentConfig& config, const BlackBoxProblem& problem, double budget,
                           std::uint64_t seed) {
  VaboConfig run = default_config(problem, std::vector<double>(problem.num_constraints(), budget));
  run.max_iterations = config.iterations;
  run.delta = config.delta;
  run.beta0 = config.beta0;
  run.beta0_per_constraint = config.beta0_per_constraint;
  run.cost_fns.assign(problem.num_constraints(), config.cost.build());
  if (config.solver) run.solver = *config.solver;
  run.seed = seed;
  run.refit_hyperparameters = config.refit_hyperparameters;
  if (config.gp_noise_variance) {
    run.objective_gp.noise_variance = *config.gp_noise_variance;
    for (auto& s : run.constraint_gps) s.noise_variance = *config.gp_noise_variance;
  }
  run.initial_safe_points = initial_safe_set(problem, config.initial_random_points, seed);
  return run;
}

}  // namespace vabo::experiment
