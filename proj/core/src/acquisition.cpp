#include "vabo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vabo/normal.hpp"

namespace vabo {

double expected_improvement(double mean, double sd, double incumbent) {
  const double gain = incumbent - mean;
  if (!(sd > kSigmaFloor)) return std::max(0.0, gain);
  const double z = gain / sd;
  return std::max(0.0, gain * normal::cdf(z) + sd * normal::pdf(z));
}

double probability_below(double threshold, double mean, double sd) {
  if (!(sd > kSigmaFloor)) return mean <= threshold ? 1.0 : 0.0;
  if (std::isinf(threshold)) return threshold > 0.0 ? 1.0 : 0.0;
  return normal::cdf((threshold - mean) / sd);
}

double feasibility_probability(double mean, double sd) { return probability_below(0.0, mean, sd); }

void AcquisitionContext::validate() const {
  const std::size_t n = constraint_gps.size();
  if (remaining_budgets.size() != n || beta.size() != n || cost_fns.size() != n) {
    throw std::invalid_argument(
        "acquisition context needs one remaining budget, beta and cost function per constraint");
  }
  if (!inverse_search_max.empty() && inverse_search_max.size() != n) {
    throw std::invalid_argument("inverse_search_max must be empty or have one entry per constraint");
  }
  for (double b : beta) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!objective_gp.is_fitted()) throw StateError("objective GP is not fitted");
  for (const auto& gp : constraint_gps) {
    if (!gp.is_fitted()) throw StateError("constraint GP is not fitted");
  }
}

double derived_inverse_search_max(const GaussianProcess& constraint_gp) {
  return std::max(0.0, constraint_gp.prior_mean()) +
         10.0 * std::sqrt(constraint_gp.kernel().signal_variance());
}

std::vector<double> budget_thresholds(const AcquisitionContext& ctx) {
  std::vector<double> out(ctx.constraint_gps.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double remaining = std::max(0.0, ctx.remaining_budgets[i]);
    // 0 * inf would be NaN; a zero share of anything is zero.
    const double share = ctx.beta[i] == 0.0 ? 0.0 : ctx.beta[i] * remaining;
    const double r_max = ctx.inverse_search_max.empty()
                             ? derived_inverse_search_max(ctx.constraint_gps[i])
                             : ctx.inverse_search_max[i];
    out[i] = inverse_cost(ctx.cost_fns[i], share, r_max);
  }
  return out;
}

AcquisitionEvaluator::AcquisitionEvaluator(const AcquisitionContext& ctx) : ctx_(ctx) {
  ctx_.validate();
  thresholds_ = budget_thresholds(ctx_);
}

PointAssessment AcquisitionEvaluator::assess(const ParameterPoint& theta) const {
  PointAssessment out;
  out.objective = ctx_.objective_gp.posterior(theta);
  out.expected_improvement = expected_improvement(out.objective.mean, out.objective.sd, ctx_.incumbent_value);
  out.constraints.reserve(ctx_.constraint_gps.size());
  for (std::size_t i = 0; i < ctx_.constraint_gps.size(); ++i) {
    const Posterior g = ctx_.constraint_gps[i].posterior(theta);
    out.feasibility *= feasibility_probability(g.mean, g.sd);
    out.budget_probability *= probability_below(thresholds_[i], g.mean, g.sd);
    out.constraints.push_back(g);
  }
  out.cei = out.feasibility * out.expected_improvement;
  return out;
}

bool AcquisitionEvaluator::chance_feasible(double budget_probability) const {
  return is_chance_feasible(budget_probability, ctx_.epsilon);
}

double cei(const AcquisitionContext& ctx, const ParameterPoint& theta) {
  return AcquisitionEvaluator(ctx).assess(theta).cei;
}

double budget_constraint_probability(const AcquisitionContext& ctx, const ParameterPoint& theta) {
  return AcquisitionEvaluator(ctx).assess(theta).budget_probability;
}

bool is_chance_feasible(double budget_probability, double epsilon) {
  return budget_probability >= 1.0 - epsilon;
}

bool is_chance_feasible(const AcquisitionContext& ctx, const ParameterPoint& theta) {
  return is_chance_feasible(budget_constraint_probability(ctx, theta), ctx.epsilon);
}

}  // namespace vabo
