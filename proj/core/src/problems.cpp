#include "vabo/problems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "vabo/random.hpp"

namespace vabo {

BlackBoxProblem::BlackBoxProblem(Box domain, std::size_t num_constraints, Function fn,
                                 ProblemMetadata metadata)
    : domain_(std::move(domain)),
      num_constraints_(num_constraints),
      fn_(std::move(fn)),
      metadata_(std::move(metadata)) {
  if (!fn_) throw std::invalid_argument("black-box problem needs a callable");
  if (!metadata_.constraint_gps.empty() && metadata_.constraint_gps.size() != num_constraints_) {
    throw std::invalid_argument("need one constraint GP setting per constraint");
  }
}

ProblemEvaluation BlackBoxProblem::evaluate(const ParameterPoint& theta) const {
  if (!domain_.contains(theta)) {
    throw std::invalid_argument("point " + to_string(theta) + " is outside the domain of problem '" +
                                metadata_.name + "'");
  }
  ProblemEvaluation out = fn_(theta);
  if (out.constraints.size() != num_constraints_) {
    std::ostringstream msg;
    msg << "problem '" << metadata_.name << "' returned " << out.constraints.size()
        << " constraint values, expected " << num_constraints_;
    throw std::runtime_error(msg.str());
  }
  const bool finite = std::isfinite(out.objective) &&
                      std::all_of(out.constraints.begin(), out.constraints.end(),
                                  [](double g) { return std::isfinite(g); });
  if (!finite) {
    throw std::runtime_error("problem '" + metadata_.name + "' returned a non-finite value at " +
                             to_string(theta));
  }
  return out;
}

Observation BlackBoxProblem::observe(const ParameterPoint& theta) const {
  ProblemEvaluation e = evaluate(theta);
  return Observation{theta, e.objective, std::move(e.constraints)};
}

ProblemEvaluation evaluate(const BlackBoxProblem& problem, const ParameterPoint& theta) {
  return problem.evaluate(theta);
}

KnownOptimum brute_force_optimum(const BlackBoxProblem& problem, std::size_t resolution) {
  if (resolution == 0) throw std::invalid_argument("brute-force resolution must be positive");
  const Box& box = problem.domain();
  const std::size_t dim = box.dimension();
  double nodes = std::pow(static_cast<double>(resolution), static_cast<double>(dim));
  if (nodes > 1e8) throw std::invalid_argument("brute-force grid exceeds 10^8 nodes");

  std::vector<std::size_t> index(dim, 0);
  ParameterPoint theta(static_cast<Eigen::Index>(dim));
  KnownOptimum best{ParameterPoint(), std::numeric_limits<double>::infinity(), resolution};
  bool found = false;
  for (;;) {
    for (std::size_t d = 0; d < dim; ++d) {
      theta[static_cast<Eigen::Index>(d)] = grid_coordinate(box.lower(d), box.upper(d), index[d], resolution);
    }
    const ProblemEvaluation e = problem.evaluate(theta);
    const bool feasible = std::all_of(e.constraints.begin(), e.constraints.end(),
                                      [](double g) { return g <= 0.0; });
    if (feasible && e.objective < best.value) {
      best.value = e.objective;
      best.theta = theta;
      found = true;
    }
    std::size_t d = dim;
    while (d > 0 && ++index[d - 1] == resolution) {
      index[d - 1] = 0;
      --d;
    }
    if (d == 0) break;
  }
  if (!found) {
    throw StateError("no feasible grid node for problem '" + problem.name() + "'");
  }
  return best;
}

BlackBoxProblem with_observation_noise(BlackBoxProblem problem, double sd, std::uint64_t seed) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) throw std::invalid_argument("noise sd must be >= 0");
  if (sd == 0.0) return problem;
  auto noisy = [inner = problem, sd, seed](const ParameterPoint& theta) {
    std::uint64_t h = seed;
    for (Eigen::Index d = 0; d < theta.size(); ++d) {
      h = derive_seed({h, std::bit_cast<std::uint64_t>(theta[d])});
    }
    auto draw = [&](std::uint64_t output) {
      const double u1 = std::max(unit_interval(derive_seed({h, output, 1})), 0x1.0p-53);
      const double u2 = unit_interval(derive_seed({h, output, 2}));
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };
    ProblemEvaluation e = inner.evaluate(theta);
    e.objective += sd * draw(0);
    for (std::size_t i = 0; i < e.constraints.size(); ++i) e.constraints[i] += sd * draw(i + 1);
    return e;
  };
  ProblemMetadata meta = problem.metadata();
  meta.description += " (with observation noise)";
  return BlackBoxProblem(problem.domain(), problem.num_constraints(), std::move(noisy), std::move(meta));
}

std::vector<ParameterPoint> initial_safe_set(const BlackBoxProblem& problem, std::size_t random_points,
                                             std::uint64_t seed) {
  std::vector<ParameterPoint> out = problem.metadata().nominal_safe_points;
  const auto& region = problem.metadata().safe_region;
  if (!region || random_points == 0) return out;
  Rng rng(derive_seed({seed, 0x5afe}));
  const std::size_t max_attempts = 20 * random_points;
  std::size_t added = 0;
  for (std::size_t attempt = 0; attempt < max_attempts && added < random_points; ++attempt) {
    ParameterPoint theta(static_cast<Eigen::Index>(region->dimension()));
    for (std::size_t d = 0; d < region->dimension(); ++d) {
      theta[static_cast<Eigen::Index>(d)] = rng.uniform(region->lower(d), region->upper(d));
    }
    theta = problem.domain().clamp(theta);
    if (problem.observe(theta).feasible()) {
      out.push_back(theta);
      ++added;
    }
  }
  return out;
}

namespace problems {

namespace {

ParameterPoint point(std::initializer_list<double> values) {
  ParameterPoint p(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) p[i++] = v;
  return p;
}

GpSettings gp_settings(double signal_variance, std::vector<double> lengthscales) {
  GpSettings s;
  s.signal_variance = signal_variance;
  s.lengthscales = std::move(lengthscales);
  s.noise_variance = 1e-6 * signal_variance;
  return s;
}

}  // namespace

BlackBoxProblem quadratic_1d() {
  ProblemMetadata meta;
  meta.name = "quadratic_1d";
  meta.description = "min x^2 s.t. 1 - x <= 0 on [-2, 2]";
  meta.known_optimum = KnownOptimum{point({1.0000300003000029}), 1.0000600015000238, 100000};
  meta.nominal_safe_points = {point({1.8})};
  meta.safe_region = Box({1.2}, {2.0});
  meta.objective_gp = gp_settings(2.0, {1.0});
  meta.constraint_gps = {gp_settings(4.0, {1.5})};
  return BlackBoxProblem(
      Box({-2.0}, {2.0}), 1,
      [](const ParameterPoint& x) {
        return ProblemEvaluation{x[0] * x[0], {1.0 - x[0]}};
      },
      std::move(meta));
}

BlackBoxProblem disk_2d() {
  ProblemMetadata meta;
  meta.name = "disk_2d";
  meta.description = "min 1 + |x - (0.3, 0.35)|^2 s.t. x outside the disk |x - (0.45, 0.45)| < 0.4";
  meta.known_optimum = KnownOptimum{point({0.122, 0.221}), 1.048325, 1001};
  meta.nominal_safe_points = {point({0.9, 0.9})};
  meta.safe_region = Box({0.8, 0.8}, {1.0, 1.0});
  meta.objective_gp = gp_settings(0.25, {0.3, 0.3});
  meta.constraint_gps = {gp_settings(64.0, {0.35, 0.35})};
  return BlackBoxProblem(
      Box({0.0, 0.0}, {1.0, 1.0}), 1,
      [](const ParameterPoint& x) {
        const double a = x[0] - 0.3;
        const double b = x[1] - 0.35;
        const double c = x[0] - 0.45;
        const double d = x[1] - 0.45;
        return ProblemEvaluation{1.0 + a * a + b * b, {40.0 * (0.16 - c * c - d * d)}};
      },
      std::move(meta));
}

Box VcsSurrogate::domain() { return Box({200.0, 300.0, 500.0}, {300.0, 400.0, 800.0}); }

namespace {

struct Scaled {
  double valve, indoor, outdoor;
};

Scaled scale_vcs(const ParameterPoint& theta) {
  return {(theta[0] - 200.0) / 100.0, (theta[1] - 300.0) / 100.0, (theta[2] - 500.0) / 300.0};
}

}  // namespace

double VcsSurrogate::power(const ParameterPoint& theta) {
  const auto [u1, u2, u3] = scale_vcs(theta);
  const double a = u1 - 0.1;
  const double b = u2 - 0.15;
  const double c = u3 - 0.5;
  return 900.0 + 160.0 * a * a + 140.0 * b * b + 90.0 * c * c + 60.0 * a * b + 30.0 * std::exp(-3.0 * u3);
}

double VcsSurrogate::discharge_temperature(const ParameterPoint& theta) {
  const auto [u1, u2, u3] = scale_vcs(theta);
  const double c = u3 - 0.55;
  return 315.0 + 50.0 * std::exp(-2.0 * u1 - 1.5 * u2) + 8.0 * c * c;
}

BlackBoxProblem vcs_surrogate() {
  ProblemMetadata meta;
  meta.name = "vcs_surrogate";
  meta.description =
      "vapor-compression set points (valve counts, indoor rpm, outdoor rpm); power [W] "
      "s.t. discharge temperature <= 331 K";
  meta.known_optimum = KnownOptimum{point({233.0, 332.0, 674.0}), 920.69761201851009, 101};
  meta.nominal_safe_points = {point({280.0, 380.0, 700.0})};
  meta.safe_region = Box({260.0, 360.0, 590.0}, {300.0, 400.0, 800.0});
  meta.objective_gp = gp_settings(1.0e4, {35.0, 35.0, 105.0});
  meta.constraint_gps = {gp_settings(225.0, {35.0, 35.0, 105.0})};
  return BlackBoxProblem(
      VcsSurrogate::domain(), 1,
      [](const ParameterPoint& theta) {
        return ProblemEvaluation{VcsSurrogate::power(theta),
                                 {VcsSurrogate::discharge_temperature(theta) - VcsSurrogate::kDischargeLimit}};
      },
      std::move(meta));
}

}  // namespace problems

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, ProblemFactory, std::less<>> factories{
      {"quadratic_1d", problems::quadratic_1d},
      {"disk_2d", problems::disk_2d},
      {"vcs_surrogate", problems::vcs_surrogate},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_problem(std::string name, ProblemFactory factory) {
  if (name.empty() || !factory) throw std::invalid_argument("problem registration needs a name and a factory");
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories.insert_or_assign(std::move(name), std::move(factory));
}

std::vector<std::string> problem_names() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

BlackBoxProblem make_problem(std::string_view name) {
  ProblemFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    const auto it = r.factories.find(name);
    if (it == r.factories.end()) {
      throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
    }
    factory = it->second;
  }
  return factory();
}

}  // namespace vabo
