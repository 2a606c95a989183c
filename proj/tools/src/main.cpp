// vabo command-line runner.
#include <cstdlib>
#include <iostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "vabo/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::filesystem::path output_dir(const std::string& flag, const vabo::experiment::ExperimentConfig& config) {
  if (!flag.empty()) return flag;
  if (config.output_dir) return *config.output_dir;
  if (const char* env = std::getenv("VABO_OUTPUT_DIR"); env && *env) return env;
  return "vabo_output";
}

void print_config_errors(const vabo::experiment::ConfigError& e) {
  fmt::print(std::cerr, "config error{}:\n", e.errors().size() > 1 ? "s" : "");
  for (const auto& msg : e.errors()) fmt::print(std::cerr, "  {}\n", msg);
}

int list_problems() {
  for (const auto& name : vabo::problem_names()) {
    const auto problem = vabo::make_problem(name);
    const auto& meta = problem.metadata();
    fmt::print("{}\n  {}\n  dimension {}, constraints {}, domain", name, meta.description, problem.dimension(),
               problem.num_constraints());
    for (std::size_t d = 0; d < problem.dimension(); ++d) {
      fmt::print(" [{}, {}]", problem.domain().lower(d), problem.domain().upper(d));
    }
    fmt::print("\n");
    if (meta.known_optimum) {
      fmt::print("  known optimum {} at {} (grid {} per dimension)\n", meta.known_optimum->value,
                 vabo::to_string(meta.known_optimum->theta), meta.known_optimum->resolution);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Violation-aware Bayesian optimization campaigns"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::size_t jobs = 1;
  auto* run = app.add_subcommand("run", "Run every (algorithm, budget, seed) cell of a config");
  run->add_option("config", config_path, "Path to a JSON config file")->required();
  run->add_option("--out", out_flag, "Output directory (default: config output_dir, then $VABO_OUTPUT_DIR, then ./vabo_output)");
  run->add_option("--jobs", jobs, "Cells to run in parallel")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list-problems", "List the built-in problems");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  validate->add_option("config", validate_path, "Path to a JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*list) return list_problems();
    if (*validate) {
      const auto config = vabo::experiment::load_config(validate_path);
      fmt::print("{}", vabo::experiment::describe(config));
      return kExitOk;
    }
    const auto config = vabo::experiment::load_config(config_path);
    const auto dir = output_dir(out_flag, config);
    const auto result = vabo::experiment::run_campaign(config, dir, jobs, std::cerr);
    fmt::print("wrote {} files to {}\n", result.written.size(), dir.string());
    return result.exit_code == 0 ? kExitOk : kExitRuntime;
  } catch (const vabo::experiment::ConfigError& e) {
    print_config_errors(e);
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitRuntime;
  }
}
