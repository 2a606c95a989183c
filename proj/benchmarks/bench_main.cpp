#include <random>

#include <benchmark/benchmark.h>

#include "vabo/baselines.hpp"

using namespace vabo;

namespace {

struct Data {
  std::vector<ParameterPoint> x;
  std::vector<double> y;
};

Data random_data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d;
  for (std::size_t k = 0; k < n; ++k) {
    ParameterPoint p(static_cast<Eigen::Index>(dim));
    for (auto& v : p) v = u(rng);
    d.y.push_back(std::sin(6.0 * p[0]) + p.sum());
    d.x.push_back(std::move(p));
  }
  return d;
}

GaussianProcess unfitted(std::size_t dim) { return GaussianProcess(RbfKernel(1.0, std::vector<double>(dim, 0.3)), 0.0); }

void BM_GpFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = random_data(n, 3, 1);
  const auto gp = unfitted(3);
  for (auto _ : state) benchmark::DoNotOptimize(gp.fit(d.x, d.y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_GpPosterior(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = random_data(n, 3, 2);
  const auto gp = unfitted(3).fit(d.x, d.y);
  const auto q = random_data(64, 3, 3).x;
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gp.posterior(q[k++ % q.size()]));
}
BENCHMARK(BM_GpPosterior)->RangeMultiplier(2)->Range(8, 128);

void BM_HyperparameterFit(benchmark::State& state) {
  const auto d = random_data(30, 2, 4);
  const auto gp = unfitted(2).fit(d.x, d.y);
  for (auto _ : state) benchmark::DoNotOptimize(fit_hyperparameters(gp));
}
BENCHMARK(BM_HyperparameterFit)->Unit(benchmark::kMillisecond);

AcquisitionContext disk_context() {
  const auto d = random_data(20, 2, 5);
  std::vector<double> g;
  for (const auto& p : d.x) g.push_back((p.array() - 0.5).square().sum() - 0.1);
  return AcquisitionContext{unfitted(2).fit(d.x, d.y), {unfitted(2).fit(d.x, g)}, 1.0, {10.0}, {1.0}, 0.01,
                            {ViolationCostFn::quadratic()}, {}};
}

void BM_GridAuxiliary(benchmark::State& state) {
  const auto ctx = disk_context();
  const Box box({0.0, 0.0}, {1.0, 1.0});
  const GridSolver grid{{static_cast<std::size_t>(state.range(0))}};
  for (auto _ : state) benchmark::DoNotOptimize(solve_auxiliary(ctx, box, grid));
}
BENCHMARK(BM_GridAuxiliary)->Arg(25)->Arg(51)->Unit(benchmark::kMillisecond);

void BM_MultistartAuxiliary(benchmark::State& state) {
  const auto ctx = disk_context();
  const Box box({0.0, 0.0}, {1.0, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(solve_auxiliary(ctx, box, MultistartSolver{}, 7));
}
BENCHMARK(BM_MultistartAuxiliary)->Unit(benchmark::kMillisecond);

void BM_VcsRun(benchmark::State& state) {
  const auto problem = problems::vcs_surrogate();
  VaboConfig c = default_config(problem, {10.0});
  c.max_iterations = 10;
  c.initial_safe_points = initial_safe_set(problem, 2, 0);
  for (auto _ : state) benchmark::DoNotOptimize(run(problem, c));
}
BENCHMARK(BM_VcsRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
