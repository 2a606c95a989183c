#pragma once

#include <string>
#include <string_view>

#include "vabo/optimizer.hpp"

namespace vabo {

enum class Algorithm { vabo, cbo, safe_bo };

std::string to_string(Algorithm algorithm);
/// Accepts "vabo", "cbo" and "safe_bo"; throws std::invalid_argument otherwise.
Algorithm parse_algorithm(std::string_view name);

/// Constrained BO: argmax of CEI over the whole domain. Budgets are tracked
/// for reporting but never stop the run. With every budget infinite this
/// produces the same trace as run() apart from the algorithm label.
RunTrace run_cbo(const BlackBoxProblem& problem, const VaboConfig& config);

/// Safe BO: argmax of CEI over points whose constraint upper confidence bound
/// mu + m * sigma is <= 0 for every constraint. When no candidate qualifies
/// the known-safe evaluated point with the smallest constraint uncertainty is
/// sampled again and the record is flagged chance_set_empty.
RunTrace run_safe_bo(const BlackBoxProblem& problem, const VaboConfig& config,
                     double confidence_multiplier = 2.0);

RunTrace run_algorithm(Algorithm algorithm, const BlackBoxProblem& problem, const VaboConfig& config,
                       double confidence_multiplier = 2.0);

}  // namespace vabo
