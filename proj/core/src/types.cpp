#include "vabo/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vabo {

Box::Box(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw std::invalid_argument("box bounds have different lengths");
  }
  if (lower_.empty()) {
    throw std::invalid_argument("box must have at least one dimension");
  }
  for (std::size_t d = 0; d < lower_.size(); ++d) {
    if (!std::isfinite(lower_[d]) || !std::isfinite(upper_[d]) || !(lower_[d] < upper_[d])) {
      std::ostringstream msg;
      msg << "invalid box interval in dimension " << d << ": [" << lower_[d] << ", " << upper_[d]
          << "]";
      throw std::invalid_argument(msg.str());
    }
  }
}

bool Box::contains(const ParameterPoint& p, double tolerance) const {
  if (static_cast<std::size_t>(p.size()) != dimension()) return false;
  for (std::size_t d = 0; d < dimension(); ++d) {
    const double x = p[static_cast<Eigen::Index>(d)];
    if (!(x >= lower_[d] - tolerance && x <= upper_[d] + tolerance)) return false;
  }
  return true;
}

ParameterPoint Box::clamp(const ParameterPoint& p) const {
  ParameterPoint out = p;
  for (std::size_t d = 0; d < dimension(); ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    out[i] = std::clamp(out[i], lower_[d], upper_[d]);
  }
  return out;
}

ParameterPoint Box::center() const {
  ParameterPoint c(static_cast<Eigen::Index>(dimension()));
  for (std::size_t d = 0; d < dimension(); ++d) {
    c[static_cast<Eigen::Index>(d)] = 0.5 * (lower_[d] + upper_[d]);
  }
  return c;
}

bool Observation::feasible() const {
  return std::all_of(constraints.begin(), constraints.end(), [](double g) { return g <= 0.0; });
}

std::string to_string(const ParameterPoint& p) {
  std::ostringstream out;
  out << '(';
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i > 0) out << ", ";
    out << p[i];
  }
  out << ')';
  return out.str();
}

double grid_coordinate(double lo, double hi, std::size_t k, std::size_t points) {
  if (points <= 1) return 0.5 * (lo + hi);
  if (k + 1 >= points) return hi;
  return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
}

}  // namespace vabo
