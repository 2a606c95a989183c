#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "vabo/optimizer.hpp"

using namespace vabo;

namespace {

ParameterPoint pt(std::initializer_list<double> v) {
  ParameterPoint p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

Observation obs(ParameterPoint theta, double l, double g) { return Observation{std::move(theta), l, {g}}; }

GaussianProcess fitted(double sv, double ls, double prior_mean, std::vector<ParameterPoint> x, std::vector<double> y) {
  const std::size_t dim = static_cast<std::size_t>(x.front().size());
  return GaussianProcess(RbfKernel(sv, std::vector<double>(dim, ls)), prior_mean, 1e-8).fit(x, y);
}

/// Objective with a single smooth acquisition peak near (0.43, 0.61) and a
/// constraint that is comfortably satisfied everywhere.
AcquisitionContext peaked_context(double epsilon) {
  return AcquisitionContext{fitted(1.0, 0.3, 1.0, {pt({0.43, 0.61})}, {-1.0}),
                            {fitted(1.0, 0.3, -4.0, {pt({0.9, 0.9})}, {-4.0})},
                            0.0,
                            {10.0},
                            {1.0},
                            epsilon,
                            {ViolationCostFn::quadratic()},
                            {}};
}

const Box kUnitSquare({0.0, 0.0}, {1.0, 1.0});

VaboConfig disk_config(double budget, std::uint64_t seed, std::size_t iterations = 15) {
  const auto problem = problems::disk_2d();
  VaboConfig c = default_config(problem, {budget});
  c.max_iterations = iterations;
  c.seed = seed;
  c.initial_safe_points = initial_safe_set(problem, 2, seed);
  return c;
}

}  // namespace

TEST(EpsilonSchedule, Examples) {
  EXPECT_NEAR(epsilon_schedule(0.1, 1)[0], 0.1, 1e-15);
  const auto ten = epsilon_schedule(0.1, 10);
  ASSERT_EQ(ten.size(), 10u);
  EXPECT_NEAR(ten[0], 0.010480741793785553, 1e-15);
  EXPECT_NEAR(epsilon_schedule(0.5, 2)[0], 0.2928932188134524, 1e-15);
}

TEST(EpsilonSchedule, ProductReconstructsDelta) {
  for (double delta : {1e-6, 0.01, 0.05, 0.1, 0.5, 0.99}) {
    for (std::size_t t : {1u, 2u, 7u, 20u, 1000u}) {
      double prod = 1.0;
      for (double e : epsilon_schedule(delta, t)) prod *= 1.0 - e;
      EXPECT_NEAR(prod, 1.0 - delta, 1e-12) << delta << " " << t;
    }
  }
}

TEST(EpsilonSchedule, RejectsBadInput) {
  EXPECT_THROW(epsilon_schedule(0.0, 5), std::invalid_argument);
  EXPECT_THROW(epsilon_schedule(1.0, 5), std::invalid_argument);
  EXPECT_THROW(epsilon_schedule(1.5, 5), std::invalid_argument);
  EXPECT_THROW(epsilon_schedule(0.1, 0), std::invalid_argument);
}

TEST(BetaSchedule, Examples) {
  for (std::size_t t = 1; t <= 20; ++t) EXPECT_EQ(beta_schedule(1.0, 20, t), 1.0);
  EXPECT_DOUBLE_EQ(beta_schedule(0.1, 20, 1), 0.1);
  EXPECT_EQ(beta_schedule(0.1, 20, 20), 1.0);
  EXPECT_DOUBLE_EQ(beta_schedule(0.01, 20, 15), 1.0 / 6.0);
}

TEST(Incumbent, Examples) {
  const std::vector<Observation> initial{obs(pt({0}), 5.0, -1.0)};
  std::vector<Observation> history;
  auto inc = incumbent(history, initial);
  EXPECT_EQ(inc.value, 5.0);

  history.push_back(obs(pt({1}), 3.0, 0.5));
  inc = incumbent(history, initial);
  EXPECT_EQ(inc.value, 5.0);
  EXPECT_EQ(inc.theta, pt({0}));

  history.push_back(obs(pt({2}), 4.0, 0.0));
  inc = incumbent(history, initial);
  EXPECT_EQ(inc.value, 4.0);
  EXPECT_EQ(inc.theta, pt({2}));
  EXPECT_EQ(inc.index, 2u);
}

TEST(Incumbent, TiesGoToEarliest) {
  const std::vector<Observation> initial{obs(pt({0}), 1.0, -1.0), obs(pt({1}), 1.0, -1.0)};
  const std::vector<Observation> history{obs(pt({2}), 1.0, -1.0)};
  EXPECT_EQ(incumbent(history, initial).index, 0u);
}

TEST(Incumbent, NothingFeasibleIsStateError) {
  const std::vector<Observation> initial{obs(pt({0}), 1.0, 2.0)};
  EXPECT_THROW(incumbent({}, initial), StateError);
}

TEST(SolveAuxiliary, GridWithinOneCellOfFineOptimum) {
  const auto ctx = peaked_context(0.999);
  const auto sol = solve_auxiliary(ctx, kUnitSquare, GridSolver{{11}});
  EXPECT_FALSE(sol.chance_set_empty);

  const AcquisitionEvaluator evaluator(ctx);
  double best = -1.0;
  ParameterPoint best_theta;
  const std::size_t fine = 1001;
  for (std::size_t i = 0; i < fine; ++i) {
    for (std::size_t j = 0; j < fine; ++j) {
      const ParameterPoint p = pt({i / 1000.0, j / 1000.0});
      const double v = evaluator.assess(p).cei;
      if (v > best) {
        best = v;
        best_theta = p;
      }
    }
  }
  EXPECT_LE((sol.theta - best_theta).cwiseAbs().maxCoeff(), 0.1 + 1e-12);
}

TEST(SolveAuxiliary, MultistartFindsThePeakDeterministically) {
  const auto ctx = peaked_context(0.999);
  const auto fine = solve_auxiliary(ctx, kUnitSquare, GridSolver{{201}});
  const auto a = solve_auxiliary(ctx, kUnitSquare, MultistartSolver{}, 42);
  const auto b = solve_auxiliary(ctx, kUnitSquare, MultistartSolver{}, 42);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_FALSE(a.chance_set_empty);
  EXPECT_GE(a.assessment.cei, fine.assessment.cei * (1.0 - 1e-3));
}

TEST(SolveAuxiliary, EmptyChanceSetFallsBackToMostLikelyPoint) {
  // Constraint believed violated everywhere, zero budget share.
  AcquisitionContext ctx{fitted(1.0, 0.3, 0.0, {pt({0.5, 0.5})}, {0.0}),
                         {fitted(1.0, 0.3, 3.0, {pt({0.2, 0.3})}, {1.0})},
                         0.0,
                         {0.0},
                         {1.0},
                         0.01,
                         {ViolationCostFn::quadratic()},
                         {}};
  const GridSolver grid{{21}};
  const auto sol = solve_auxiliary(ctx, kUnitSquare, grid);
  EXPECT_TRUE(sol.chance_set_empty);

  const AcquisitionEvaluator evaluator(ctx);
  double best = -1.0;
  ParameterPoint expected;
  for (std::size_t i = 0; i < 21; ++i) {
    for (std::size_t j = 0; j < 21; ++j) {
      const ParameterPoint p = pt({grid_coordinate(0, 1, i, 21), grid_coordinate(0, 1, j, 21)});
      const double prob = evaluator.assess(p).budget_probability;
      EXPECT_FALSE(evaluator.chance_feasible(prob));
      if (prob > best) {
        best = prob;
        expected = p;
      }
    }
  }
  EXPECT_EQ(sol.theta, expected);
  EXPECT_EQ(sol.assessment.budget_probability, best);

  const auto ms = solve_auxiliary(ctx, kUnitSquare, MultistartSolver{5, 50}, 1);
  EXPECT_TRUE(ms.chance_set_empty);
}

TEST(SolveAuxiliary, TiesGoToLexicographicallyFirstNode) {
  // Data far outside the box: the posterior, hence CEI, is the same everywhere.
  AcquisitionContext ctx{fitted(1.0, 0.3, 0.0, {pt({50, 50})}, {0.0}),
                         {},
                         0.0,
                         {},
                         {},
                         0.05,
                         {},
                         {}};
  const auto sol = solve_auxiliary(ctx, Box({-1.0, 2.0}, {1.0, 3.0}), GridSolver{{7}});
  EXPECT_EQ(sol.theta, pt({-1.0, 2.0}));
}

TEST(Config, ValidationNamesTheField) {
  const auto problem = problems::disk_2d();
  auto expect_invalid = [&](auto mutate, const std::string& field) {
    VaboConfig c = default_config(problem, {10.0});
    mutate(c);
    try {
      c.validate(1);
      ADD_FAILURE() << "no error for " << field;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_invalid([](VaboConfig& c) { c.max_iterations = 0; }, "max_iterations");
  expect_invalid([](VaboConfig& c) { c.delta = 1.0; }, "delta");
  expect_invalid([](VaboConfig& c) { c.beta0 = 0.0; }, "beta0");
  expect_invalid([](VaboConfig& c) { c.budgets = {-1.0}; }, "budgets");
  expect_invalid([](VaboConfig& c) { c.budgets = {1.0, 2.0}; }, "budgets");
  expect_invalid([](VaboConfig& c) { c.initial_safe_points = {}; }, "initial_safe_points");
  expect_invalid([](VaboConfig& c) { c.initial_safe_points = {pt({2.0, 0.5})}; }, "outside the domain");
  expect_invalid([](VaboConfig& c) { c.solver = GridSolver{{5, 5, 5}}; }, "grid");
  expect_invalid([](VaboConfig& c) { c.objective_gp.lengthscales = {1.0}; }, "objective_gp");
}

TEST(Run, TraceInvariantsOnDisk) {
  const auto problem = problems::disk_2d();
  for (double budget : {0.0, 1.0, 10.0, kInfiniteBudget}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto config = disk_config(budget, seed);
      const auto trace = run(problem, config);
      ASSERT_FALSE(trace.records.empty());
      EXPECT_LE(trace.iterations_used(), config.max_iterations);
      double min_initial = std::numeric_limits<double>::infinity();
      for (const auto& r : trace.records) {
        if (r.iteration == 0) min_initial = std::min(min_initial, r.objective);
      }
      for (std::size_t k = 1; k < trace.records.size(); ++k) {
        const auto& a = trace.records[k - 1];
        const auto& b = trace.records[k];
        EXPECT_LE(b.incumbent_value, a.incumbent_value);
        EXPECT_GE(b.spent[0], a.spent[0]);
        if (b.iteration > 0) EXPECT_EQ(b.iteration, a.iteration + 1);
      }
      EXPECT_LE(trace.best_value, min_initial);
      EXPECT_EQ(trace.best_value, trace.records.back().incumbent_value);
      if (trace.termination == Termination::budget_exhausted) {
        EXPECT_LT(trace.records.back().remaining[0], 0.0);
        for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) EXPECT_GE(trace.records[k].remaining[0], 0.0);
        EXPECT_EQ(trace.exhausted_constraint, 0u);
      } else {
        EXPECT_EQ(trace.termination, Termination::iterations_exhausted);
        EXPECT_EQ(trace.iterations_used(), config.max_iterations);
      }
    }
  }
}

TEST(Run, ZeroBudgetSelectsOnlyChanceFeasiblePoints) {
  const auto problem = problems::disk_2d();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto config = disk_config(0.0, seed);
    config.delta = 0.01;
    const auto trace = run(problem, config);
    for (const auto& r : trace.records) {
      if (r.iteration == 0 || r.chance_set_empty) continue;
      // One constraint: the budget probability is Pr(g <= 0) itself.
      EXPECT_GE(r.budget_probability, r.required_probability);
      EXPECT_TRUE(r.admissible);
    }
  }
}

TEST(Run, Deterministic) {
  const auto problem = problems::disk_2d();
  const auto config = disk_config(10.0, 3);
  EXPECT_TRUE(identical(run(problem, config), run(problem, config)));
  auto other = config;
  other.seed = 4;
  other.initial_safe_points = initial_safe_set(problem, 2, 4);
  EXPECT_FALSE(identical(run(problem, config), run(problem, other)));
}

TEST(Run, EvaluationFailureKeepsPartialTrace) {
  auto calls = std::make_shared<int>(0);
  const auto base = problems::quadratic_1d();
  BlackBoxProblem flaky(base.domain(), 1, [calls, base](const ParameterPoint& x) {
    if (++*calls > 4) throw std::runtime_error("simulator crashed");
    return base.evaluate(x);
  }, base.metadata());
  auto config = default_config(flaky, {10.0});
  config.max_iterations = 10;
  const auto trace = run(flaky, config);
  EXPECT_EQ(trace.termination, Termination::evaluation_failure);
  EXPECT_EQ(trace.failure_message, "simulator crashed");
  EXPECT_EQ(trace.records.size(), 4u);
  EXPECT_EQ(trace.iterations_used(), 3u);
}

TEST(Run, NonFiniteOutputIsAnEvaluationFailure) {
  const auto base = problems::quadratic_1d();
  BlackBoxProblem bad(base.domain(), 1, [](const ParameterPoint& x) {
    return ProblemEvaluation{x[0] < 1.5 ? std::nan("") : x[0], {1.0 - x[0]}};
  }, base.metadata());
  auto config = default_config(bad, {10.0});
  const auto trace = run(bad, config);
  EXPECT_EQ(trace.termination, Termination::evaluation_failure);
  EXPECT_NE(trace.failure_message.find("non-finite"), std::string::npos);
}

TEST(Run, WarnsAboutInfeasibleInitialPoints) {
  const auto problem = problems::disk_2d();
  auto config = disk_config(10.0, 0, 3);
  config.initial_safe_points = {pt({0.9, 0.9}), pt({0.45, 0.45})};
  const auto trace = run(problem, config);
  ASSERT_EQ(trace.warnings.size(), 1u);
  EXPECT_NE(trace.warnings[0].find("(0.45, 0.45)"), std::string::npos);
  EXPECT_EQ(trace.records[0].incumbent_value, trace.records[1].incumbent_value);
}

TEST(Run, NoFeasibleInitialPointIsStateError) {
  const auto problem = problems::disk_2d();
  auto config = disk_config(10.0, 0, 3);
  config.initial_safe_points = {pt({0.45, 0.45})};
  EXPECT_THROW(run(problem, config), StateError);
}

TEST(Run, RejectsMismatchedProblem) {
  auto config = disk_config(10.0, 0, 3);
  EXPECT_THROW(run(problems::quadratic_1d(), config), std::invalid_argument);
}

TEST(Run, MultistartOnFourDimensions) {
  const Box box({-1, -1, -1, -1}, {1, 1, 1, 1});
  ProblemMetadata meta;
  meta.name = "sphere_4d";
  meta.nominal_safe_points = {pt({0.8, 0.8, 0.8, 0.8})};
  meta.objective_gp.lengthscales = {0.7, 0.7, 0.7, 0.7};
  meta.constraint_gps = {GpSettings{1.0, {0.7, 0.7, 0.7, 0.7}, 1e-6, std::nullopt}};
  const BlackBoxProblem sphere(box, 1, [](const ParameterPoint& x) {
    return ProblemEvaluation{(x.array() - 0.1).square().sum(), {0.2 - x.sum()}};
  }, meta);
  auto config = default_config(sphere, {1.0});
  ASSERT_TRUE(std::holds_alternative<MultistartSolver>(config.solver));
  config.solver = MultistartSolver{5, 60};
  config.max_iterations = 8;
  const auto a = run(sphere, config);
  EXPECT_TRUE(identical(a, run(sphere, config)));
  EXPECT_LT(a.best_value, a.records.front().objective);
}

TEST(Run, NoConstraintsAndRefit) {
  const Box box({-2.0}, {2.0});
  ProblemMetadata meta;
  meta.name = "parabola";
  meta.nominal_safe_points = {pt({1.5})};
  const BlackBoxProblem parabola(box, 0, [](const ParameterPoint& x) {
    return ProblemEvaluation{(x[0] - 0.3) * (x[0] - 0.3), {}};
  }, meta);
  auto config = default_config(parabola, {});
  config.max_iterations = 10;
  config.refit_hyperparameters = true;
  const auto trace = run(parabola, config);
  EXPECT_EQ(trace.termination, Termination::iterations_exhausted);
  EXPECT_LT(std::abs(trace.best_theta[0] - 0.3), 0.1);
}
