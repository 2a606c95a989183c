#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace vabo {

inline constexpr double kInfiniteBudget = std::numeric_limits<double>::infinity();

/// Maps the size of a constraint violation s = [g]^+ to a nonnegative cost.
///
/// Every kind satisfies c(0) = 0, is non-decreasing and is continuous on
/// [0, inf) (hence left continuous):
///   - quadratic: c(s) = scale * s^2
///   - linear:    c(s) = scale * s
///   - table:     piecewise-linear through (r_k, c_k) knots starting at (0, 0),
///                constant after the last knot. Plateaus are allowed.
class ViolationCostFn {
 public:
  enum class Kind { quadratic, linear, table };

  static ViolationCostFn quadratic(double scale = 1.0);
  static ViolationCostFn linear(double scale = 1.0);
  /// Knots are (violation, cost) pairs. The first must be (0, 0); violations
  /// strictly increasing; costs non-decreasing.
  static ViolationCostFn table(std::vector<std::pair<double, double>> knots);

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  /// c(s) for a violation size s >= 0; negative s is treated as 0.
  double operator()(double violation) const;

  /// sup { r in [0, r_max] : c(r) <= s }. Closed form for quadratic and
  /// linear, bisection to 1e-10 in r for tables. An infinite s means "no
  /// limit" and returns +inf regardless of r_max.
  double inverse(double s, double r_max = std::numeric_limits<double>::infinity()) const;

  friend bool operator==(const ViolationCostFn&, const ViolationCostFn&) = default;

 private:
  ViolationCostFn(Kind kind, double scale, std::vector<std::pair<double, double>> knots);

  Kind kind_;
  double scale_;
  std::vector<std::pair<double, double>> knots_;
};

/// c([g]^+): zero whenever g <= 0.
double violation_cost(const ViolationCostFn& fn, double g_value);

/// Throws std::invalid_argument for negative or NaN s.
double inverse_cost(const ViolationCostFn& fn, double s,
                    double r_max = std::numeric_limits<double>::infinity());

/// Per-constraint budgets and cumulative violation costs.
class ViolationAccount {
 public:
  ViolationAccount(std::vector<double> budgets, std::vector<ViolationCostFn> cost_fns);

  struct ChargeResult;

  /// Adds c_i([g_i]^+) to each constraint's spend. `exhausted` lists every
  /// constraint whose remaining budget is now strictly negative.
  ChargeResult charge(std::span<const double> g_values) const;

  std::size_t size() const { return budgets_.size(); }
  double budget(std::size_t i) const { return budgets_[i]; }
  double spent(std::size_t i) const { return spent_[i]; }
  double remaining(std::size_t i) const { return budgets_[i] - spent_[i]; }
  const std::vector<double>& budgets() const { return budgets_; }
  const std::vector<double>& spent() const { return spent_; }
  std::vector<double> remaining() const;
  const std::vector<ViolationCostFn>& cost_fns() const { return cost_fns_; }

 private:
  std::vector<double> budgets_;
  std::vector<double> spent_;
  std::vector<ViolationCostFn> cost_fns_;
};

struct ViolationAccount::ChargeResult {
  ViolationAccount account;
  std::vector<std::size_t> exhausted;
};

}  // namespace vabo
