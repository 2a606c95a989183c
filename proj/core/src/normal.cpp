#include "vabo/normal.hpp"

#include <cmath>
#include <numbers>

namespace vabo::normal {

double pdf(double z) {
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::sqrt2 * std::numbers::inv_sqrtpi);
}

double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace vabo::normal
