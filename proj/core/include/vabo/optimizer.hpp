#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vabo/acquisition.hpp"
#include "vabo/gp.hpp"
#include "vabo/problems.hpp"
#include "vabo/types.hpp"
#include "vabo/violation.hpp"

namespace vabo {

/// Exhaustive search over an evenly spaced grid (end points included).
struct GridSolver {
  /// Nodes per dimension; a single entry applies to every dimension.
  std::vector<std::size_t> points_per_dimension{25};
};

/// Seeded uniform starts refined by a coordinate-wise pattern search that
/// only accepts moves staying inside the admissible set.
struct MultistartSolver {
  std::size_t starts = 20;
  /// Acquisition evaluations allowed per local search.
  std::size_t local_evaluations = 200;
};

using AuxiliarySolver = std::variant<GridSolver, MultistartSolver>;

/// Grid with 25 nodes per dimension up to 3 dimensions, multistart beyond.
AuxiliarySolver default_solver(std::size_t dimension);

struct VaboConfig {
  /// T.
  std::size_t max_iterations = 20;
  /// Overall probability of overspending some budget, in (0, 1).
  double delta = 0.05;
  /// Lower bound of the per-step budget share schedule, in (0, 1].
  double beta0 = 1.0;
  /// Optional per-constraint beta0; empty means beta0 for every constraint.
  std::vector<double> beta0_per_constraint;
  /// B_i; kInfiniteBudget is allowed.
  std::vector<double> budgets;
  std::vector<ViolationCostFn> cost_fns;
  Box domain;
  std::vector<ParameterPoint> initial_safe_points;
  AuxiliarySolver solver = GridSolver{};
  std::uint64_t seed = 0;

  GpSettings objective_gp;
  std::vector<GpSettings> constraint_gps;
  /// Re-maximize the marginal likelihood of every GP each iteration.
  bool refit_hyperparameters = false;
  /// Upper end of the inverse-cost search; empty derives it from the GPs.
  std::vector<double> inverse_search_max;

  /// Throws std::invalid_argument naming the first offending field.
  void validate(std::size_t num_constraints) const;
};

/// Copies the problem's domain, suggested GP priors and nominal safe points
/// into a config with the given budgets and quadratic violation costs.
VaboConfig default_config(const BlackBoxProblem& problem, std::vector<double> budgets);

enum class Termination { iterations_exhausted, budget_exhausted, evaluation_failure };

std::string to_string(Termination termination);

struct IterationRecord {
  /// 0 for evaluations of the initial safe set, then 1..T.
  std::size_t iteration = 0;
  ParameterPoint theta;
  double objective = 0.0;
  std::vector<double> constraints;
  ParameterPoint incumbent_theta;
  double incumbent_value = 0.0;
  std::vector<double> spent;
  std::vector<double> remaining;
  /// No candidate satisfied the selection rule's admissibility test, so a
  /// fallback point was chosen.
  bool chance_set_empty = false;
  /// Selection-time diagnostics (1 / 1 / 0 for initial evaluations).
  double budget_probability = 1.0;
  double required_probability = 1.0;
  double acquisition = 0.0;
  /// Selection-time admissibility of the chosen point under the rule in use.
  bool admissible = true;
};

struct RunTrace {
  std::string algorithm;
  std::vector<IterationRecord> records;
  Termination termination = Termination::iterations_exhausted;
  /// Set when termination == budget_exhausted.
  std::optional<std::size_t> exhausted_constraint;
  std::string failure_message;
  std::vector<std::string> warnings;
  /// Returned solution: best feasible evaluated point.
  ParameterPoint best_theta;
  double best_value = 0.0;

  /// Records with iteration >= 1.
  std::size_t iterations_used() const;
  bool any_chance_set_empty() const;
  double total_spent() const;
};

/// Bitwise comparison of every field (NaN-safe).
bool identical(const RunTrace& a, const RunTrace& b);

/// Uniform epsilon_t = 1 - (1 - delta)^(1/T), so prod_t (1 - epsilon_t) = 1 - delta.
/// Throws std::invalid_argument unless 0 < delta < 1 and T >= 1.
std::vector<double> epsilon_schedule(double delta, std::size_t iterations);

/// max(beta0, 1 / (T - t + 1)) for 1 <= t <= T.
double beta_schedule(double beta0, std::size_t iterations, std::size_t t);

struct Incumbent {
  ParameterPoint theta;
  double value = 0.0;
  /// Position in the concatenation initial ++ history.
  std::size_t index = 0;
};

/// Feasible (observed g <= 0) evaluated point with the smallest objective over
/// the initial evaluations followed by the history; ties go to the earliest.
/// Throws StateError if nothing feasible has been evaluated.
Incumbent incumbent(std::span<const Observation> history, std::span<const Observation> initial_evaluations);

struct AuxiliarySolution {
  ParameterPoint theta;
  /// No probed point satisfied the chance constraint.
  bool chance_set_empty = false;
  PointAssessment assessment;
};

/// Maximizes CEI over the points satisfying the chance constraint. With grid
/// solving, ties go to the lexicographically smallest grid index. When no
/// probed point is chance-feasible, returns the probed point with the largest
/// budget_constraint_probability. `seed` drives multistart sampling only.
AuxiliarySolution solve_auxiliary(const AcquisitionContext& ctx, const Box& domain,
                                  const AuxiliarySolver& solver, std::uint64_t seed = 0);

/// Runs violation-aware BO and returns the full trace. Deterministic in
/// (problem, config). Evaluation failures end the run with
/// Termination::evaluation_failure and keep the partial trace; invalid
/// configurations throw std::invalid_argument.
RunTrace run(const BlackBoxProblem& problem, const VaboConfig& config);

namespace detail {

/// Candidate-selection rule used by the shared optimization loop.
struct SelectionRule {
  enum class Kind { violation_aware, unconstrained, safe_set };
  Kind kind = Kind::violation_aware;
  /// Confidence multiplier m for the safe_set rule.
  double confidence_multiplier = 2.0;
  /// Stop once some remaining budget is negative.
  bool stop_on_exhausted_budget = true;
};

RunTrace run_loop(const BlackBoxProblem& problem, const VaboConfig& config, const SelectionRule& rule,
                  std::string algorithm);

}  // namespace detail

}  // namespace vabo
