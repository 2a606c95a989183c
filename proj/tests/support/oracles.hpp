#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library's numerical paths.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double rbf(double signal_variance, const std::vector<double>& lengthscales, const Eigen::VectorXd& a,
                  const Eigen::VectorXd& b) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double u = (a[d] - b[d]) / lengthscales[static_cast<std::size_t>(d)];
    r2 += u * u;
  }
  return signal_variance * std::exp(-0.5 * r2);
}

struct MeanVar {
  double mean;
  double var;
};

/// Posterior through an explicit matrix inverse of K + diag * I. Kernel entries
/// are evaluated in double, then the inverse and the products are carried in
/// long double: with tiny noise the Gram matrix has condition numbers near 1e8,
/// and a double inverse loses the posterior variance to cancellation.
inline MeanVar explicit_inverse_posterior(double signal_variance, const std::vector<double>& lengthscales,
                                          double diag, double prior_mean, const std::vector<Eigen::VectorXd>& x,
                                          const std::vector<double>& y, const Eigen::VectorXd& q) {
  using Matrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix k(n, n);
  Vector kq(n);
  Vector r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = rbf(signal_variance, lengthscales, x[i], x[j]);
    k(i, i) += diag;
    kq[i] = rbf(signal_variance, lengthscales, x[i], q);
    r[i] = static_cast<long double>(y[static_cast<std::size_t>(i)]) - prior_mean;
  }
  const Matrix inv = k.fullPivLu().inverse();
  const long double var = signal_variance - kq.dot(inv * kq);
  return {static_cast<double>(prior_mean + kq.dot(inv * r)), static_cast<double>(std::max(0.0L, var))};
}

/// Standard normal CDF from the Maclaurin series of erf in long double.
/// Accurate to well below 1e-12 for |z| <= 5.
inline double normal_cdf_series(double z) {
  const long double x = static_cast<long double>(z) / std::sqrt(2.0L);
  long double term = x;  // x^(2n+1) (-1)^n / n!
  long double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-30L) break;
  }
  const long double erf = 2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum;
  return static_cast<double>(0.5L * (1.0L + erf));
}

struct MonteCarlo {
  double mean;
  double standard_error;
};

/// E[max(0, incumbent - X)], X ~ N(mean, sd^2), from `samples` draws.
inline MonteCarlo expected_improvement_mc(double mean, double sd, double incumbent, std::size_t samples,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double v = std::max(0.0, incumbent - (mean + sd * normal(rng)));
    sum += v;
    sum2 += v * v;
  }
  const double m = sum / static_cast<double>(samples);
  const double var = std::max(0.0, sum2 / static_cast<double>(samples) - m * m);
  return {m, std::sqrt(var / static_cast<double>(samples))};
}

}  // namespace oracle
