#include "vabo/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vabo/random.hpp"

namespace vabo {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void validate_gp_settings(const GpSettings& s, std::size_t dim, const std::string& field) {
  require(s.signal_variance > 0.0 && std::isfinite(s.signal_variance),
          field + ".signal_variance must be positive");
  require(s.lengthscales.empty() || s.lengthscales.size() == dim,
          field + ".lengthscales must be empty or have one entry per dimension");
  for (double l : s.lengthscales) require(l > 0.0 && std::isfinite(l), field + ".lengthscales must be positive");
  require(s.noise_variance >= 0.0 && std::isfinite(s.noise_variance), field + ".noise_variance must be >= 0");
  require(!s.prior_mean || std::isfinite(*s.prior_mean), field + ".prior_mean must be finite");
}

}  // namespace

AuxiliarySolver default_solver(std::size_t dimension) {
  if (dimension <= 3) return GridSolver{};
  return MultistartSolver{};
}

void VaboConfig::validate(std::size_t num_constraints) const {
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(beta0 > 0.0 && beta0 <= 1.0, "beta0 must lie in (0, 1]");
  require(beta0_per_constraint.empty() || beta0_per_constraint.size() == num_constraints,
          "beta0_per_constraint must be empty or have one entry per constraint");
  for (double b : beta0_per_constraint) require(b > 0.0 && b <= 1.0, "beta0_per_constraint entries must lie in (0, 1]");
  require(budgets.size() == num_constraints, "budgets must have one entry per constraint");
  for (double b : budgets) require(b >= 0.0, "budgets must be >= 0");
  require(cost_fns.size() == num_constraints, "cost_fns must have one entry per constraint");
  require(domain.dimension() >= 1, "domain must have at least one dimension");
  require(!initial_safe_points.empty(), "initial_safe_points must not be empty");
  for (const auto& p : initial_safe_points) {
    require(domain.contains(p), "initial safe point " + to_string(p) + " is outside the domain");
  }
  if (const auto* grid = std::get_if<GridSolver>(&solver)) {
    require(grid->points_per_dimension.size() == 1 || grid->points_per_dimension.size() == domain.dimension(),
            "grid solver needs one resolution or one per dimension");
    for (auto r : grid->points_per_dimension) require(r >= 1, "grid resolution must be >= 1");
  } else {
    const auto& ms = std::get<MultistartSolver>(solver);
    require(ms.starts >= 1, "multistart solver needs at least one start");
  }
  validate_gp_settings(objective_gp, domain.dimension(), "objective_gp");
  require(constraint_gps.empty() || constraint_gps.size() == num_constraints,
          "constraint_gps must be empty or have one entry per constraint");
  for (std::size_t i = 0; i < constraint_gps.size(); ++i) {
    validate_gp_settings(constraint_gps[i], domain.dimension(), "constraint_gps[" + std::to_string(i) + "]");
  }
  require(inverse_search_max.empty() || inverse_search_max.size() == num_constraints,
          "inverse_search_max must be empty or have one entry per constraint");
  for (double r : inverse_search_max) require(r >= 0.0, "inverse_search_max entries must be >= 0");
}

VaboConfig default_config(const BlackBoxProblem& problem, std::vector<double> budgets) {
  const std::size_t n = problem.num_constraints();
  if (budgets.size() == 1 && n > 1) budgets.assign(n, budgets.front());
  VaboConfig config;
  config.budgets = std::move(budgets);
  config.cost_fns.assign(n, ViolationCostFn::quadratic());
  config.domain = problem.domain();
  config.initial_safe_points = problem.metadata().nominal_safe_points;
  config.solver = default_solver(problem.dimension());
  config.objective_gp = problem.metadata().objective_gp;
  config.constraint_gps = problem.metadata().constraint_gps;
  return config;
}

std::string to_string(Termination termination) {
  switch (termination) {
    case Termination::iterations_exhausted:
      return "iterations_exhausted";
    case Termination::budget_exhausted:
      return "budget_exhausted";
    case Termination::evaluation_failure:
      return "evaluation_failure";
  }
  return "unknown";
}

std::size_t RunTrace::iterations_used() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const IterationRecord& r) { return r.iteration > 0; }));
}

bool RunTrace::any_chance_set_empty() const {
  return std::any_of(records.begin(), records.end(), [](const IterationRecord& r) { return r.chance_set_empty; });
}

double RunTrace::total_spent() const {
  if (records.empty()) return 0.0;
  const auto& spent = records.back().spent;
  return std::accumulate(spent.begin(), spent.end(), 0.0);
}

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) { return same_bits(x, y); });
}

bool same_bits(const ParameterPoint& a, const ParameterPoint& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

bool same_record(const IterationRecord& a, const IterationRecord& b) {
  return a.iteration == b.iteration && same_bits(a.theta, b.theta) && same_bits(a.objective, b.objective) &&
         same_bits(a.constraints, b.constraints) && same_bits(a.incumbent_theta, b.incumbent_theta) &&
         same_bits(a.incumbent_value, b.incumbent_value) && same_bits(a.spent, b.spent) &&
         same_bits(a.remaining, b.remaining) && a.chance_set_empty == b.chance_set_empty &&
         same_bits(a.budget_probability, b.budget_probability) &&
         same_bits(a.required_probability, b.required_probability) && same_bits(a.acquisition, b.acquisition) &&
         a.admissible == b.admissible;
}

}  // namespace

bool identical(const RunTrace& a, const RunTrace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    if (!same_record(a.records[k], b.records[k])) return false;
  }
  return a.termination == b.termination && a.exhausted_constraint == b.exhausted_constraint &&
         a.failure_message == b.failure_message && a.warnings == b.warnings && same_bits(a.best_theta, b.best_theta) &&
         same_bits(a.best_value, b.best_value);
}

std::vector<double> epsilon_schedule(double delta, std::size_t iterations) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(iterations >= 1, "epsilon schedule needs at least one iteration");
  // 1 - (1 - delta)^(1/T) without cancellation for small delta.
  const double eps = -std::expm1(std::log1p(-delta) / static_cast<double>(iterations));
  return std::vector<double>(iterations, eps);
}

double beta_schedule(double beta0, std::size_t iterations, std::size_t t) {
  require(t >= 1 && t <= iterations, "beta schedule needs 1 <= t <= T");
  return std::max(beta0, 1.0 / static_cast<double>(iterations - t + 1));
}

Incumbent incumbent(std::span<const Observation> history, std::span<const Observation> initial_evaluations) {
  std::optional<Incumbent> best;
  std::size_t index = 0;
  auto consider = [&](const Observation& obs) {
    if (obs.feasible() && (!best || obs.objective < best->value)) {
      best = Incumbent{obs.theta, obs.objective, index};
    }
    ++index;
  };
  for (const auto& obs : initial_evaluations) consider(obs);
  for (const auto& obs : history) consider(obs);
  if (!best) {
    throw StateError(
        "no feasible point has been evaluated; the initial safe set must contain at least one point "
        "that satisfies every constraint");
  }
  return *best;
}

namespace {

struct Scored {
  PointAssessment assessment;
  bool admissible = false;
  double fallback = 0.0;
};

using ScoreFn = std::function<Scored(const ParameterPoint&)>;

struct SearchResult {
  ParameterPoint theta;
  Scored scored;
  bool admissible_found = false;
};

/// Keeps the first-seen maximum of the acquisition among admissible points and
/// of the fallback score among all points.
class BestTracker {
 public:
  void offer(const ParameterPoint& theta, const Scored& s) {
    if (s.admissible && (!has_admissible_ || s.assessment.cei > best_admissible_.scored.assessment.cei)) {
      best_admissible_ = {theta, s, true};
      has_admissible_ = true;
    }
    if (!has_fallback_ || s.fallback > best_fallback_.scored.fallback) {
      best_fallback_ = {theta, s, false};
      has_fallback_ = true;
    }
  }

  SearchResult result() const { return has_admissible_ ? best_admissible_ : best_fallback_; }

 private:
  bool has_admissible_ = false;
  bool has_fallback_ = false;
  SearchResult best_admissible_;
  SearchResult best_fallback_;
};

SearchResult grid_search(const Box& domain, const GridSolver& solver, const ScoreFn& score) {
  const std::size_t dim = domain.dimension();
  std::vector<std::size_t> points(dim);
  std::vector<std::vector<double>> coords(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    points[d] = solver.points_per_dimension.size() == 1 ? solver.points_per_dimension[0]
                                                          : solver.points_per_dimension[d];
    coords[d].resize(points[d]);
    for (std::size_t k = 0; k < points[d]; ++k) {
      coords[d][k] = grid_coordinate(domain.lower(d), domain.upper(d), k, points[d]);
    }
  }
  // Lexicographic order, first dimension most significant.
  BestTracker tracker;
  std::vector<std::size_t> index(dim, 0);
  ParameterPoint theta(static_cast<Eigen::Index>(dim));
  for (;;) {
    for (std::size_t d = 0; d < dim; ++d) theta[static_cast<Eigen::Index>(d)] = coords[d][index[d]];
    tracker.offer(theta, score(theta));
    std::size_t d = dim;
    while (d > 0 && ++index[d - 1] == points[d - 1]) {
      index[d - 1] = 0;
      --d;
    }
    if (d == 0) break;
  }
  return tracker.result();
}

SearchResult multistart_search(const Box& domain, const MultistartSolver& solver, std::uint64_t seed,
                               const std::vector<ParameterPoint>& extra_starts, const ScoreFn& score) {
  const std::size_t dim = domain.dimension();
  Rng rng(derive_seed({seed, 0x6d756c7469ULL}));
  std::vector<ParameterPoint> starts = extra_starts;
  for (std::size_t s = 0; s < solver.starts; ++s) {
    ParameterPoint p(static_cast<Eigen::Index>(dim));
    for (std::size_t d = 0; d < dim; ++d) p[static_cast<Eigen::Index>(d)] = rng.uniform(domain.lower(d), domain.upper(d));
    starts.push_back(p);
  }

  BestTracker tracker;
  for (const auto& start : starts) {
    const Scored first = score(start);
    tracker.offer(start, first);
    if (!first.admissible) continue;

    ParameterPoint x = start;
    double fx = first.assessment.cei;
    std::vector<double> step(dim);
    for (std::size_t d = 0; d < dim; ++d) step[d] = 0.1 * domain.width(d);
    std::size_t evaluations = 0;
    while (evaluations < solver.local_evaluations) {
      bool moved = false;
      for (std::size_t d = 0; d < dim && evaluations < solver.local_evaluations; ++d) {
        for (const double direction : {+1.0, -1.0}) {
          ParameterPoint y = x;
          y[static_cast<Eigen::Index>(d)] += direction * step[d];
          y = domain.clamp(y);
          if (y == x) continue;
          const Scored sy = score(y);
          ++evaluations;
          tracker.offer(y, sy);
          if (sy.admissible && sy.assessment.cei > fx) {
            x = y;
            fx = sy.assessment.cei;
            moved = true;
            break;
          }
          if (evaluations >= solver.local_evaluations) break;
        }
      }
      if (!moved) {
        bool tiny = true;
        for (std::size_t d = 0; d < dim; ++d) {
          step[d] *= 0.5;
          tiny = tiny && step[d] < 1e-6 * domain.width(d);
        }
        if (tiny) break;
      }
    }
  }
  return tracker.result();
}

SearchResult search(const Box& domain, const AuxiliarySolver& solver, std::uint64_t seed,
                    const std::vector<ParameterPoint>& extra_starts, const ScoreFn& score) {
  if (const auto* grid = std::get_if<GridSolver>(&solver)) return grid_search(domain, *grid, score);
  return multistart_search(domain, std::get<MultistartSolver>(solver), seed, extra_starts, score);
}

}  // namespace

AuxiliarySolution solve_auxiliary(const AcquisitionContext& ctx, const Box& domain, const AuxiliarySolver& solver,
                                  std::uint64_t seed) {
  const AcquisitionEvaluator evaluator(ctx);
  const ScoreFn score = [&](const ParameterPoint& theta) {
    Scored s;
    s.assessment = evaluator.assess(theta);
    s.admissible = evaluator.chance_feasible(s.assessment.budget_probability);
    s.fallback = s.assessment.budget_probability;
    return s;
  };
  const SearchResult r = search(domain, solver, seed, {}, score);
  return AuxiliarySolution{r.theta, !r.admissible_found, r.scored.assessment};
}

RunTrace run(const BlackBoxProblem& problem, const VaboConfig& config) {
  return detail::run_loop(problem, config, detail::SelectionRule{}, "vabo");
}

namespace detail {

namespace {

GaussianProcess fit_model(const GpSettings& settings, double default_prior_mean, const Box& domain,
                          const std::vector<ParameterPoint>& inputs, const std::vector<double>& targets,
                          bool refit) {
  std::vector<double> lengthscales = settings.lengthscales;
  if (lengthscales.empty()) {
    for (std::size_t d = 0; d < domain.dimension(); ++d) lengthscales.push_back(0.25 * domain.width(d));
  }
  const GaussianProcess prior(RbfKernel(settings.signal_variance, std::move(lengthscales)),
                              settings.prior_mean.value_or(default_prior_mean), settings.noise_variance);
  GaussianProcess fitted = prior.fit(inputs, targets);
  if (refit && inputs.size() >= 3) fitted = fit_hyperparameters(fitted);
  return fitted;
}

struct Selection {
  ParameterPoint theta;
  PointAssessment assessment;
  bool fallback = false;
  bool admissible = false;
};

}  // namespace

RunTrace run_loop(const BlackBoxProblem& problem, const VaboConfig& config, const SelectionRule& rule,
                  std::string algorithm) {
  const std::size_t n_constraints = problem.num_constraints();
  config.validate(n_constraints);
  require(config.domain.dimension() == problem.dimension(), "config domain dimension does not match the problem");
  for (std::size_t d = 0; d < problem.dimension(); ++d) {
    require(config.domain.lower(d) >= problem.domain().lower(d) && config.domain.upper(d) <= problem.domain().upper(d),
            "config domain must lie inside the problem domain");
  }
  require(rule.confidence_multiplier > 0.0, "confidence_multiplier must be positive");

  RunTrace trace;
  trace.algorithm = std::move(algorithm);
  const std::size_t horizon = config.max_iterations;
  const std::vector<double> epsilons = epsilon_schedule(config.delta, horizon);
  std::vector<GpSettings> constraint_settings = config.constraint_gps;
  if (constraint_settings.empty()) constraint_settings.assign(n_constraints, GpSettings{});

  std::vector<Observation> initial;
  for (std::size_t k = 0; k < config.initial_safe_points.size(); ++k) {
    const ParameterPoint& theta = config.initial_safe_points[k];
    try {
      initial.push_back(problem.observe(theta));
    } catch (const std::exception& e) {
      trace.termination = Termination::evaluation_failure;
      trace.failure_message = e.what();
      return trace;
    }
    if (!initial.back().feasible()) {
      trace.warnings.push_back("initial safe point " + std::to_string(k) + " " + to_string(theta) +
                               " violates a constraint");
    }
  }

  Incumbent best = incumbent({}, initial);
  ViolationAccount account(config.budgets, config.cost_fns);
  for (const auto& obs : initial) {
    IterationRecord r;
    r.iteration = 0;
    r.theta = obs.theta;
    r.objective = obs.objective;
    r.constraints = obs.constraints;
    r.incumbent_theta = best.theta;
    r.incumbent_value = best.value;
    r.spent = account.spent();
    r.remaining = account.remaining();
    trace.records.push_back(std::move(r));
  }

  std::vector<Observation> history;
  std::vector<ParameterPoint> inputs;
  std::vector<double> objectives;
  std::vector<std::vector<double>> constraint_values(n_constraints);
  auto append_data = [&](const Observation& obs) {
    inputs.push_back(obs.theta);
    objectives.push_back(obs.objective);
    for (std::size_t i = 0; i < n_constraints; ++i) constraint_values[i].push_back(obs.constraints[i]);
  };
  for (const auto& obs : initial) append_data(obs);

  for (std::size_t t = 1; t <= horizon; ++t) {
    const double mean_objective =
        std::accumulate(objectives.begin(), objectives.end(), 0.0) / static_cast<double>(objectives.size());

    std::vector<GaussianProcess> constraint_gps;
    constraint_gps.reserve(n_constraints);
    for (std::size_t i = 0; i < n_constraints; ++i) {
      constraint_gps.push_back(fit_model(constraint_settings[i], 0.0, config.domain, inputs, constraint_values[i],
                                         config.refit_hyperparameters));
    }
    std::vector<double> beta(n_constraints);
    for (std::size_t i = 0; i < n_constraints; ++i) {
      const double b0 = config.beta0_per_constraint.empty() ? config.beta0 : config.beta0_per_constraint[i];
      beta[i] = beta_schedule(b0, horizon, t);
    }
    const AcquisitionContext ctx{
        fit_model(config.objective_gp, mean_objective, config.domain, inputs, objectives, config.refit_hyperparameters),
        std::move(constraint_gps),
        best.value,
        account.remaining(),
        std::move(beta),
        epsilons[t - 1],
        config.cost_fns,
        config.inverse_search_max};
    const AcquisitionEvaluator evaluator(ctx);

    ScoreFn score;
    switch (rule.kind) {
      case SelectionRule::Kind::violation_aware:
        score = [&](const ParameterPoint& theta) {
          Scored s;
          s.assessment = evaluator.assess(theta);
          s.admissible = evaluator.chance_feasible(s.assessment.budget_probability);
          s.fallback = s.assessment.budget_probability;
          return s;
        };
        break;
      case SelectionRule::Kind::unconstrained:
        score = [&](const ParameterPoint& theta) {
          Scored s;
          s.assessment = evaluator.assess(theta);
          s.admissible = true;
          return s;
        };
        break;
      case SelectionRule::Kind::safe_set:
        score = [&](const ParameterPoint& theta) {
          Scored s;
          s.assessment = evaluator.assess(theta);
          s.admissible = std::all_of(s.assessment.constraints.begin(), s.assessment.constraints.end(),
                                     [&](const Posterior& g) { return g.mean + rule.confidence_multiplier * g.sd <= 0.0; });
          return s;
        };
        break;
    }

    const SearchResult found = search(config.domain, config.solver, derive_seed({config.seed, t}), {best.theta}, score);
    Selection selection{found.theta, found.scored.assessment, !found.admissible_found, found.scored.admissible};

    if (rule.kind == SelectionRule::Kind::safe_set && !found.admissible_found) {
      // Re-sample the known-safe point whose constraints the model is most sure about.
      std::optional<std::pair<double, std::size_t>> least;
      std::vector<const Observation*> safe_points;
      for (const auto& obs : initial) safe_points.push_back(&obs);
      for (const auto& obs : history) safe_points.push_back(&obs);
      for (std::size_t k = 0; k < safe_points.size(); ++k) {
        if (!safe_points[k]->feasible()) continue;
        double uncertainty = 0.0;
        for (const auto& gp : ctx.constraint_gps) uncertainty = std::max(uncertainty, gp.posterior(safe_points[k]->theta).sd);
        if (!least || uncertainty < least->first) least = std::make_pair(uncertainty, k);
      }
      const ParameterPoint& theta = safe_points[least->second]->theta;
      selection = Selection{theta, evaluator.assess(theta), true, true};
    }

    Observation obs;
    try {
      obs = problem.observe(selection.theta);
    } catch (const std::exception& e) {
      trace.termination = Termination::evaluation_failure;
      trace.failure_message = e.what();
      break;
    }

    auto charged = account.charge(obs.constraints);
    account = std::move(charged.account);
    history.push_back(obs);
    append_data(obs);
    best = incumbent(history, initial);

    IterationRecord r;
    r.iteration = t;
    r.theta = obs.theta;
    r.objective = obs.objective;
    r.constraints = obs.constraints;
    r.incumbent_theta = best.theta;
    r.incumbent_value = best.value;
    r.spent = account.spent();
    r.remaining = account.remaining();
    r.chance_set_empty = selection.fallback;
    r.budget_probability = selection.assessment.budget_probability;
    r.required_probability = evaluator.required_probability();
    r.acquisition = selection.assessment.cei;
    r.admissible = selection.admissible;
    trace.records.push_back(std::move(r));

    if (rule.stop_on_exhausted_budget && !charged.exhausted.empty()) {
      trace.termination = Termination::budget_exhausted;
      trace.exhausted_constraint = charged.exhausted.front();
      break;
    }
  }

  trace.best_theta = best.theta;
  trace.best_value = best.value;
  return trace;
}

}  // namespace detail

}  // namespace vabo
