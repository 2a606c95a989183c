#pragma once

#include <vector>

#include "vabo/gp.hpp"
#include "vabo/types.hpp"
#include "vabo/violation.hpp"

namespace vabo {

/// Posterior standard deviations at or below this are treated as point masses.
inline constexpr double kSigmaFloor = 1e-12;

/// E[max(0, incumbent - X)] for X ~ N(mean, sd^2).
double expected_improvement(double mean, double sd, double incumbent);

/// Pr(X <= threshold) for X ~ N(mean, sd^2). A point mass (sd <= kSigmaFloor)
/// gives exactly 0 or 1; an infinite threshold gives 1.
double probability_below(double threshold, double mean, double sd);

/// Pr(X <= 0) for X ~ N(mean, sd^2).
double feasibility_probability(double mean, double sd);

/// Everything the auxiliary problem needs at iteration t.
struct AcquisitionContext {
  GaussianProcess objective_gp;
  std::vector<GaussianProcess> constraint_gps;
  /// Best observed feasible objective so far.
  double incumbent_value = 0.0;
  /// B_{i,t}; negative values are clamped to 0 inside the chance constraint.
  std::vector<double> remaining_budgets;
  /// Fraction of the remaining budget each constraint may use this step.
  std::vector<double> beta;
  /// Allowed probability of overspending the per-step share, in (0, 1).
  double epsilon = 0.05;
  std::vector<ViolationCostFn> cost_fns;
  /// Upper end of the inverse-cost search per constraint. Empty means derive
  /// it from each constraint GP (see derived_inverse_search_max).
  std::vector<double> inverse_search_max;

  /// Throws std::invalid_argument on inconsistent sizes or out-of-range beta /
  /// epsilon, StateError if a GP is unfitted.
  void validate() const;
};

/// max(0, prior_mean) + 10 * sqrt(signal_variance): a violation level the GP
/// considers implausible a priori.
double derived_inverse_search_max(const GaussianProcess& constraint_gp);

/// c_i^{-1}(beta_i * max(0, B_i)) per constraint: the largest g_i value whose
/// cost stays within this step's share of the budget.
std::vector<double> budget_thresholds(const AcquisitionContext& ctx);

struct PointAssessment {
  double expected_improvement = 0.0;
  /// prod_i Pr(g_i <= 0).
  double feasibility = 1.0;
  double cei = 0.0;
  /// prod_i Pr(c_i([g_i]^+) <= beta_i B_i).
  double budget_probability = 1.0;
  Posterior objective;
  std::vector<Posterior> constraints;
};

/// Evaluates the acquisition quantities at many points for one context,
/// computing the budget thresholds once. Holds a reference to the context.
class AcquisitionEvaluator {
 public:
  explicit AcquisitionEvaluator(const AcquisitionContext& ctx);

  PointAssessment assess(const ParameterPoint& theta) const;
  bool chance_feasible(double budget_probability) const;
  double required_probability() const { return 1.0 - ctx_.epsilon; }
  const std::vector<double>& thresholds() const { return thresholds_; }
  const AcquisitionContext& context() const { return ctx_; }

 private:
  const AcquisitionContext& ctx_;
  std::vector<double> thresholds_;
};

/// Constrained expected improvement: prod_i Pr(g_i <= 0) * EI.
double cei(const AcquisitionContext& ctx, const ParameterPoint& theta);

/// Left-hand side of the chance constraint.
double budget_constraint_probability(const AcquisitionContext& ctx, const ParameterPoint& theta);

/// probability >= 1 - epsilon (inclusive).
bool is_chance_feasible(double budget_probability, double epsilon);
bool is_chance_feasible(const AcquisitionContext& ctx, const ParameterPoint& theta);

}  // namespace vabo
