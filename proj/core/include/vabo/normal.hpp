#pragma once

namespace vabo::normal {

/// Standard normal density.
double pdf(double z);

/// Standard normal CDF, 0.5 * erfc(-z / sqrt(2)).
///
/// Uses the C library's complementary error function, which is accurate to a
/// few ulp over the whole real line (relative error well below 1e-12). Going
/// through erfc rather than 1 + erf keeps the lower tail accurate: cdf(-10) is
/// ~7.6e-24, not 0. cdf(+inf) == 1 and cdf(-inf) == 0 exactly.
double cdf(double z);

}  // namespace vabo::normal
