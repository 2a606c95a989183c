#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vabo/gp.hpp"
#include "vabo/types.hpp"

namespace vabo {

struct ProblemEvaluation {
  double objective = 0.0;
  std::vector<double> constraints;
};

struct KnownOptimum {
  ParameterPoint theta;
  double value = 0.0;
  /// Grid points per dimension at which brute_force_optimum reproduces it.
  std::size_t resolution = 0;
};

struct ProblemMetadata {
  std::string name;
  std::string description;
  std::optional<KnownOptimum> known_optimum;
  /// Points known to satisfy every constraint.
  std::vector<ParameterPoint> nominal_safe_points;
  /// Optional sub-box that is entirely feasible; used to draw seeded extra
  /// initial points.
  std::optional<Box> safe_region;
  /// Suggested GP priors for the objective and each constraint.
  GpSettings objective_gp;
  std::vector<GpSettings> constraint_gps;
};

/// A deterministic black box theta -> (objective, constraints) on a box.
///
/// This is the extension point for user problems: wrap any callable returning
/// a ProblemEvaluation with exactly num_constraints entries, describe it with
/// ProblemMetadata, and optionally make it available by name through
/// register_problem().
class BlackBoxProblem {
 public:
  using Function = std::function<ProblemEvaluation(const ParameterPoint&)>;

  BlackBoxProblem(Box domain, std::size_t num_constraints, Function fn, ProblemMetadata metadata);

  /// Throws std::invalid_argument when theta is outside the domain, and
  /// std::runtime_error when the callable returns the wrong number of
  /// constraints or non-finite values.
  ProblemEvaluation evaluate(const ParameterPoint& theta) const;
  Observation observe(const ParameterPoint& theta) const;

  const Box& domain() const { return domain_; }
  std::size_t dimension() const { return domain_.dimension(); }
  std::size_t num_constraints() const { return num_constraints_; }
  const std::string& name() const { return metadata_.name; }
  const ProblemMetadata& metadata() const { return metadata_; }
  ProblemMetadata& metadata() { return metadata_; }

 private:
  Box domain_;
  std::size_t num_constraints_;
  Function fn_;
  ProblemMetadata metadata_;
};

ProblemEvaluation evaluate(const BlackBoxProblem& problem, const ParameterPoint& theta);

/// Exhaustive argmin of the objective over a `resolution`^n grid subject to
/// g <= 0 at the node. Ties go to the lexicographically first node. Throws
/// StateError when no node is feasible and std::invalid_argument when the grid
/// would exceed 10^8 nodes.
KnownOptimum brute_force_optimum(const BlackBoxProblem& problem, std::size_t resolution);

/// Adds N(0, sd^2) noise to every output. The noise is a pure function of
/// (seed, theta, output index), so the wrapped problem stays deterministic.
BlackBoxProblem with_observation_noise(BlackBoxProblem problem, double sd, std::uint64_t seed);

/// The problem's nominal safe points plus up to `random_points` seeded
/// uniform draws from its safe region (draws that turn out infeasible are
/// skipped). Problems without a safe region return only the nominal points.
std::vector<ParameterPoint> initial_safe_set(const BlackBoxProblem& problem,
                                             std::size_t random_points, std::uint64_t seed);

namespace problems {

/// min theta^2  s.t.  1 - theta <= 0  on [-2, 2]. Optimum theta = 1, value 1.
BlackBoxProblem quadratic_1d();

/// min 1 + |theta - (0.3, 0.35)|^2  s.t.  40 (0.16 - |theta - (0.45, 0.45)|^2) <= 0
/// on [0, 1]^2. The unconstrained minimizer sits inside the infeasible disk;
/// the constrained optimum is on the disk boundary near (0.122, 0.221).
BlackBoxProblem disk_2d();

/// Steady-state vapor-compression stand-in. theta = (expansion valve counts,
/// indoor fan rpm, outdoor fan rpm) on [200,300] x [300,400] x [500,800].
/// Objective: power in W. Constraint: discharge temperature - 331 K.
///
/// With u the position of theta scaled to [0, 1]^3:
///   power(u) = 900 + 160 (u1-0.1)^2 + 140 (u2-0.15)^2 + 90 (u3-0.5)^2
///              + 60 (u1-0.1)(u2-0.15) + 30 exp(-3 u3)
///   T_d(u)   = 315 + 50 exp(-2 u1 - 1.5 u2) + 8 (u3-0.55)^2
/// Closing the valve and slowing the indoor fan saves power but heats the
/// compressor discharge, so the unconstrained minimizer is infeasible.
/// The coefficients were hand-picked (and checked by brute force) so that
/// (280, 380, 700) is feasible with ~13 K margin and the constrained optimum
/// uses ~14% less power than it. On the domain, power stays within
/// [900, 1250] W and T_d within [315, 370] K. The known optimum stored in the
/// metadata is brute_force_optimum(vcs_surrogate(), 101); rerun that after
/// changing a coefficient.
BlackBoxProblem vcs_surrogate();

struct VcsSurrogate {
  static constexpr double kDischargeLimit = 331.0;
  static Box domain();
  static double power(const ParameterPoint& theta);
  static double discharge_temperature(const ParameterPoint& theta);
};

}  // namespace problems

using ProblemFactory = std::function<BlackBoxProblem()>;

/// Makes a problem available to make_problem() and the CLI. Replaces any
/// previous registration under the same name. Thread-safe.
void register_problem(std::string name, ProblemFactory factory);

/// Registered names, sorted.
std::vector<std::string> problem_names();

/// Throws std::invalid_argument for unknown names.
BlackBoxProblem make_problem(std::string_view name);

}  // namespace vabo
