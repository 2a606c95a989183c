#include "vabo/baselines.hpp"

#include <stdexcept>

namespace vabo {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::vabo:
      return "vabo";
    case Algorithm::cbo:
      return "cbo";
    case Algorithm::safe_bo:
      return "safe_bo";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "vabo") return Algorithm::vabo;
  if (name == "cbo") return Algorithm::cbo;
  if (name == "safe_bo") return Algorithm::safe_bo;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected vabo, cbo or safe_bo)");
}

RunTrace run_cbo(const BlackBoxProblem& problem, const VaboConfig& config) {
  detail::SelectionRule rule;
  rule.kind = detail::SelectionRule::Kind::unconstrained;
  rule.stop_on_exhausted_budget = false;
  return detail::run_loop(problem, config, rule, "cbo");
}

RunTrace run_safe_bo(const BlackBoxProblem& problem, const VaboConfig& config, double confidence_multiplier) {
  detail::SelectionRule rule;
  rule.kind = detail::SelectionRule::Kind::safe_set;
  rule.confidence_multiplier = confidence_multiplier;
  rule.stop_on_exhausted_budget = false;
  return detail::run_loop(problem, config, rule, "safe_bo");
}

RunTrace run_algorithm(Algorithm algorithm, const BlackBoxProblem& problem, const VaboConfig& config,
                       double confidence_multiplier) {
  switch (algorithm) {
    case Algorithm::vabo:
      return run(problem, config);
    case Algorithm::cbo:
      return run_cbo(problem, config);
    case Algorithm::safe_bo:
      return run_safe_bo(problem, config, confidence_multiplier);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace vabo
