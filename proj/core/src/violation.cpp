#include "vabo/violation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vabo {

namespace {

constexpr double kBisectionTolerance = 1e-10;

}  // namespace

ViolationCostFn::ViolationCostFn(Kind kind, double scale, std::vector<std::pair<double, double>> knots)
    : kind_(kind), scale_(scale), knots_(std::move(knots)) {}

ViolationCostFn ViolationCostFn::quadratic(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("quadratic violation cost needs a positive finite scale");
  }
  return ViolationCostFn(Kind::quadratic, scale, {});
}

ViolationCostFn ViolationCostFn::linear(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("linear violation cost needs a positive finite scale");
  }
  return ViolationCostFn(Kind::linear, scale, {});
}

ViolationCostFn ViolationCostFn::table(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) {
    throw std::invalid_argument("violation cost table needs at least two knots");
  }
  if (knots.front().first != 0.0 || knots.front().second != 0.0) {
    throw std::invalid_argument("violation cost table must start at (0, 0)");
  }
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const auto [r, c] = knots[k];
    if (!std::isfinite(r) || !std::isfinite(c)) {
      throw std::invalid_argument("violation cost table knots must be finite");
    }
    if (!(r > knots[k - 1].first)) {
      throw std::invalid_argument("violation cost table knot " + std::to_string(k) +
                                  " is not strictly increasing in violation");
    }
    if (c < knots[k - 1].second) {
      throw std::invalid_argument("violation cost table knot " + std::to_string(k) +
                                  " decreases the cost");
    }
  }
  return ViolationCostFn(Kind::table, 1.0, std::move(knots));
}

double ViolationCostFn::operator()(double violation) const {
  const double s = violation > 0.0 ? violation : 0.0;
  switch (kind_) {
    case Kind::quadratic:
      return scale_ * s * s;
    case Kind::linear:
      return scale_ * s;
    case Kind::table: {
      if (s >= knots_.back().first) return knots_.back().second;
      const auto upper = std::upper_bound(knots_.begin(), knots_.end(), s,
                                          [](double v, const auto& knot) { return v < knot.first; });
      const auto lower = upper - 1;
      const double t = (s - lower->first) / (upper->first - lower->first);
      return lower->second + t * (upper->second - lower->second);
    }
  }
  return 0.0;
}

double ViolationCostFn::inverse(double s, double r_max) const {
  if (std::isnan(s) || s < 0.0) throw std::invalid_argument("inverse violation cost needs s >= 0");
  if (std::isinf(s)) return std::numeric_limits<double>::infinity();
  if (std::isnan(r_max) || r_max < 0.0) throw std::invalid_argument("r_max must be >= 0");
  switch (kind_) {
    case Kind::quadratic:
      return std::min(std::sqrt(s / scale_), r_max);
    case Kind::linear:
      return std::min(s / scale_, r_max);
    case Kind::table: {
      // The table is constant past its last knot, so the sup is unbounded
      // there and r_max decides.
      double hi = std::min(r_max, knots_.back().first);
      if ((*this)(hi) <= s) return r_max;
      double lo = 0.0;  // c(lo) <= s < c(hi)
      while (hi - lo > kBisectionTolerance) {
        const double mid = 0.5 * (lo + hi);
        if ((*this)(mid) <= s) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return lo;
    }
  }
  return 0.0;
}

double violation_cost(const ViolationCostFn& fn, double g_value) { return fn(g_value); }

double inverse_cost(const ViolationCostFn& fn, double s, double r_max) { return fn.inverse(s, r_max); }

ViolationAccount::ViolationAccount(std::vector<double> budgets, std::vector<ViolationCostFn> cost_fns)
    : budgets_(std::move(budgets)), spent_(budgets_.size(), 0.0), cost_fns_(std::move(cost_fns)) {
  if (budgets_.size() != cost_fns_.size()) {
    throw std::invalid_argument("need exactly one violation cost function per budget");
  }
  for (double b : budgets_) {
    if (std::isnan(b) || b < 0.0) throw std::invalid_argument("violation budgets must be >= 0");
  }
}

ViolationAccount::ChargeResult ViolationAccount::charge(std::span<const double> g_values) const {
  if (g_values.size() != budgets_.size()) {
    throw std::invalid_argument("charge expects one constraint value per budget");
  }
  ChargeResult result{*this, {}};
  for (std::size_t i = 0; i < budgets_.size(); ++i) {
    result.account.spent_[i] += violation_cost(cost_fns_[i], g_values[i]);
    if (result.account.remaining(i) < 0.0) result.exhausted.push_back(i);
  }
  return result;
}

std::vector<double> ViolationAccount::remaining() const {
  std::vector<double> out(budgets_.size());
  for (std::size_t i = 0; i < budgets_.size(); ++i) out[i] = remaining(i);
  return out;
}

}  // namespace vabo
