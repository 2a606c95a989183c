#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vabo/baselines.hpp"

namespace vabo::experiment {

struct CostSpec {
  ViolationCostFn::Kind kind = ViolationCostFn::Kind::quadratic;
  double scale = 1.0;
  std::vector<std::pair<double, double>> knots;

  ViolationCostFn build() const;
};

struct ExperimentConfig {
  std::string problem = "vcs_surrogate";
  std::vector<Algorithm> algorithms{Algorithm::vabo, Algorithm::cbo, Algorithm::safe_bo};
  std::vector<double> budgets{0.0, 10.0, 20.0};
  std::size_t iterations = 20;
  double delta = 0.05;
  double beta0 = 1.0;
  std::vector<double> beta0_per_constraint;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  CostSpec cost;
  /// Unset means the default for the problem's dimension.
  std::optional<AuxiliarySolver> solver;
  double safe_bo_confidence_multiplier = 2.0;
  bool refit_hyperparameters = false;
  /// Overrides the problem's suggested GP noise variance when set.
  std::optional<double> gp_noise_variance;
  /// Seeded draws from the problem's safe region added to its nominal points.
  std::size_t initial_random_points = 2;
  double observation_noise_sd = 0.0;
  std::optional<std::string> output_dir;
};

/// Every problem found while reading a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses JSON text. Blank text yields the defaults. Syntax errors are
/// reported with line and column.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Human-readable dump used by `vabo validate`.
std::string describe(const ExperimentConfig& config);

/// Optimizer config for one campaign cell.
VaboConfig make_run_config(const ExperimentConfig& config, const BlackBoxProblem& problem, double budget,
                           std::uint64_t seed);

/// The problem a campaign runs on, including the optional noise wrapper.
BlackBoxProblem make_campaign_problem(const ExperimentConfig& config, std::uint64_t seed);

/// "0", "10", "2.5", "inf".
std::string format_budget(double budget);
std::string trace_file_name(Algorithm algorithm, double budget, std::uint64_t seed);

std::vector<std::string> trace_header(std::size_t dimension, std::size_t num_constraints);
void write_trace_csv(std::ostream& out, const RunTrace& trace, std::size_t dimension, std::size_t num_constraints);

struct CellResult {
  Algorithm algorithm = Algorithm::vabo;
  double budget = 0.0;
  std::uint64_t seed = 0;
  std::optional<RunTrace> trace;
  /// Set when the run threw before producing a trace.
  std::string error;
};

struct CampaignResult {
  std::vector<CellResult> cells;
  std::vector<std::filesystem::path> written;
  /// 0 success, 1 some run failed.
  int exit_code = 0;
};

/// Runs every (algorithm, budget, seed) cell, `jobs` at a time, then writes
/// summary.csv and the two SVG charts into `out_dir`.
CampaignResult run_campaign(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::size_t jobs,
                            std::ostream& log);

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& cells);

/// Reads the trace CSVs back and draws mean incumbent value and mean
/// cumulative violation cost per (algorithm, budget) against iteration.
void render_charts(const std::filesystem::path& out_dir, const std::vector<CellResult>& cells,
                   std::size_t iterations);

}  // namespace vabo::experiment
