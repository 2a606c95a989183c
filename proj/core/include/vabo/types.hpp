#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vabo {

/// A point in the tunable parameter space.
using ParameterPoint = Eigen::VectorXd;

/// Raised when a linear-algebra routine cannot produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an object is used before it is ready (e.g. an unfitted GP) or a
/// precondition on accumulated state does not hold.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Axis-aligned box [lower_d, upper_d] in R^n.
class Box {
 public:
  Box() = default;
  Box(std::vector<double> lower, std::vector<double> upper);

  std::size_t dimension() const { return lower_.size(); }
  double lower(std::size_t d) const { return lower_[d]; }
  double upper(std::size_t d) const { return upper_[d]; }
  double width(std::size_t d) const { return upper_[d] - lower_[d]; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  bool contains(const ParameterPoint& p, double tolerance = 0.0) const;
  ParameterPoint clamp(const ParameterPoint& p) const;
  ParameterPoint center() const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// One experiment: the parameters that were applied and everything measured.
struct Observation {
  ParameterPoint theta;
  double objective = 0.0;
  std::vector<double> constraints;

  /// g_i <= 0 for every constraint; the boundary counts as feasible.
  bool feasible() const;
};

std::string to_string(const ParameterPoint& p);

/// Coordinate of node k of an evenly spaced grid with `points` nodes on
/// [lo, hi]. The end nodes are exactly lo and hi; a single node sits at the
/// midpoint.
double grid_coordinate(double lo, double hi, std::size_t k, std::size_t points);

}  // namespace vabo
