#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vabo/experiment.hpp"

namespace vabo::experiment {

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
};

/// Sample standard deviation; 0 for a single value.
Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return {std::nan(""), std::nan("")};
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

std::string format_budget(double budget) {
  if (std::isinf(budget)) return "inf";
  return fmt::format("{}", budget);
}

std::string trace_file_name(Algorithm algorithm, double budget, std::uint64_t seed) {
  return fmt::format("trace_{}_{}_{}.csv", to_string(algorithm), format_budget(budget), seed);
}

std::vector<std::string> trace_header(std::size_t dimension, std::size_t num_constraints) {
  std::vector<std::string> h{"iteration"};
  for (std::size_t d = 1; d <= dimension; ++d) h.push_back(fmt::format("theta_{}", d));
  h.emplace_back("objective");
  for (std::size_t i = 1; i <= num_constraints; ++i) h.push_back(fmt::format("g_{}", i));
  h.emplace_back("incumbent_value");
  for (std::size_t i = 1; i <= num_constraints; ++i) h.push_back(fmt::format("spent_{}", i));
  for (std::size_t i = 1; i <= num_constraints; ++i) h.push_back(fmt::format("remaining_{}", i));
  h.emplace_back("chance_set_empty");
  return h;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace, std::size_t dimension, std::size_t num_constraints) {
  const auto header = trace_header(dimension, num_constraints);
  fmt::print(out, "{}\n", fmt::join(header, ","));
  std::vector<std::string> row;
  for (const auto& r : trace.records) {
    row.clear();
    row.push_back(std::to_string(r.iteration));
    for (Eigen::Index d = 0; d < r.theta.size(); ++d) row.push_back(num(r.theta[d]));
    row.push_back(num(r.objective));
    for (double g : r.constraints) row.push_back(num(g));
    row.push_back(num(r.incumbent_value));
    for (double s : r.spent) row.push_back(num(s));
    for (double s : r.remaining) row.push_back(num(s));
    row.emplace_back(r.chance_set_empty ? "1" : "0");
    fmt::print(out, "{}\n", fmt::join(row, ","));
  }
}

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  fmt::print(out,
             "algorithm,budget,runs,final_incumbent_mean,final_incumbent_sd,total_spent_mean,total_spent_sd,"
             "overspent_runs,failed_runs\n");
  std::vector<std::pair<Algorithm, double>> groups;
  for (const auto& c : cells) {
    const std::pair key{c.algorithm, c.budget};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [algorithm, budget] : groups) {
    std::vector<double> incumbents;
    std::vector<double> spent;
    std::size_t runs = 0;
    std::size_t overspent = 0;
    std::size_t failed = 0;
    for (const auto& c : cells) {
      if (c.algorithm != algorithm || c.budget != budget) continue;
      ++runs;
      if (!c.trace || c.trace->termination == Termination::evaluation_failure) ++failed;
      if (!c.trace || c.trace->records.empty()) continue;
      const auto& last = c.trace->records.back();
      incumbents.push_back(last.incumbent_value);
      spent.push_back(c.trace->total_spent());
      if (std::any_of(last.remaining.begin(), last.remaining.end(), [](double r) { return r < 0.0; })) ++overspent;
    }
    const Stats inc = stats(incumbents);
    const Stats sp = stats(spent);
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", to_string(algorithm), format_budget(budget), runs, num(inc.mean),
               num(inc.sd), num(sp.mean), num(sp.sd), overspent, failed);
  }
}

CampaignResult run_campaign(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::size_t jobs,
                            std::ostream& log) {
  CampaignResult result;
  for (Algorithm a : config.algorithms) {
    for (double b : config.budgets) {
      for (std::uint64_t s : config.seeds) result.cells.push_back(CellResult{a, b, s, std::nullopt, {}});
    }
  }
  std::filesystem::create_directories(out_dir);

  const BlackBoxProblem reference = make_problem(config.problem);
  const std::size_t dim = reference.dimension();
  const std::size_t n_constraints = reference.num_constraints();

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  const std::size_t total = result.cells.size();
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      CellResult& cell = result.cells[k];
      try {
        const BlackBoxProblem problem = make_campaign_problem(config, cell.seed);
        const VaboConfig run = make_run_config(config, problem, cell.budget, cell.seed);
        cell.trace = run_algorithm(cell.algorithm, problem, run, config.safe_bo_confidence_multiplier);
        const auto path = out_dir / trace_file_name(cell.algorithm, cell.budget, cell.seed);
        std::ofstream out(path, std::ios::binary);
        write_trace_csv(out, *cell.trace, dim, n_constraints);
        if (!out) throw std::runtime_error("cannot write " + path.string());
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      std::lock_guard lock(log_mutex);
      const std::size_t finished = ++done;
      if (!cell.error.empty()) {
        fmt::print(log, "[{}/{}] {} B={} seed={}: error: {}\n", finished, total, to_string(cell.algorithm),
                   format_budget(cell.budget), cell.seed, cell.error);
      } else {
        const auto& t = *cell.trace;
        fmt::print(log, "[{}/{}] {} B={} seed={}: {} after {} iterations, incumbent {:.6g}, spent {:.6g}{}\n", finished,
                   total, to_string(cell.algorithm), format_budget(cell.budget), cell.seed, to_string(t.termination),
                   t.iterations_used(), t.records.empty() ? std::nan("") : t.records.back().incumbent_value,
                   t.total_spent(), t.failure_message.empty() ? "" : " (" + t.failure_message + ")");
        for (const auto& w : t.warnings) fmt::print(log, "  warning: {}\n", w);
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs == 0 ? 1 : jobs, total));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Everything below runs after the join, in cell order.
  for (const auto& cell : result.cells) {
    if (cell.trace) result.written.push_back(out_dir / trace_file_name(cell.algorithm, cell.budget, cell.seed));
    const bool failed = !cell.error.empty() || (cell.trace && cell.trace->termination == Termination::evaluation_failure);
    if (failed) result.exit_code = 1;
  }
  {
    std::ofstream out(out_dir / "summary.csv", std::ios::binary);
    write_summary_csv(out, result.cells);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "summary.csv").string());
  }
  result.written.push_back(out_dir / "summary.csv");
  render_charts(out_dir, result.cells, config.iterations);
  result.written.push_back(out_dir / "convergence.svg");
  result.written.push_back(out_dir / "violation.svg");
  return result;
}

}  // namespace vabo::experiment
