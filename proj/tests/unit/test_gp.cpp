#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vabo/gp.hpp"

using vabo::GaussianProcess;
using vabo::ParameterPoint;
using vabo::RbfKernel;

namespace {

ParameterPoint pt(std::initializer_list<double> v) {
  ParameterPoint p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

std::vector<ParameterPoint> random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ParameterPoint> out;
  for (std::size_t k = 0; k < n; ++k) {
    ParameterPoint p(static_cast<Eigen::Index>(dim));
    for (auto& x : p) x = u(rng);
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST(Kernel, SelfCovarianceIsSignalVariance) {
  RbfKernel k(2.0, {0.7, 1.3});
  EXPECT_DOUBLE_EQ(vabo::kernel_eval(k, pt({1, 2}), pt({1, 2})), 2.0);
}

TEST(Kernel, UnitDistance) {
  RbfKernel k(1.0, {1.0});
  EXPECT_NEAR(vabo::kernel_eval(k, pt({0}), pt({1})), 0.6065306597126334, 1e-15);
}

TEST(Kernel, DecaysToZeroFarAway) {
  RbfKernel k(1.0, {1.0});
  EXPECT_LE(vabo::kernel_eval(k, pt({0}), pt({1e6})), 1e-300);
}

TEST(Kernel, RejectsDimensionMismatchAndBadSettings) {
  RbfKernel k(1.0, {1.0, 1.0});
  EXPECT_THROW(k(pt({0}), pt({0, 1})), std::invalid_argument);
  EXPECT_THROW(RbfKernel(0.0, {1.0}), std::invalid_argument);
  EXPECT_THROW(RbfKernel(1.0, {-1.0}), std::invalid_argument);
  EXPECT_THROW(RbfKernel(1.0, {}), std::invalid_argument);
}

TEST(GaussianProcess, InterpolatesSinglePointWithoutNoise) {
  GaussianProcess gp(RbfKernel(1.0, {0.5}), 0.0, 0.0);
  const std::vector<ParameterPoint> x{pt({0.3})};
  const std::vector<double> y{5.0};
  const auto fitted = gp.fit(x, y);
  const auto post = fitted.posterior(pt({0.3}));
  EXPECT_NEAR(post.mean, 5.0, 1e-12);
  EXPECT_LE(post.sd, 1e-6);
  EXPECT_EQ(fitted.jitter(), 0.0);
}

// Two identical inputs with different values and no noise: the Gram matrix is
// singular, so the fit escalates jitter and the mean at the input averages.
TEST(GaussianProcess, DuplicateInputsSucceedThroughJitter) {
  GaussianProcess gp(RbfKernel(1.0, {1.0}), 0.0, 0.0);
  const std::vector<ParameterPoint> x{pt({0.5}), pt({0.5})};
  const std::vector<double> y{1.0, 3.0};
  const auto fitted = gp.fit(x, y);
  EXPECT_GT(fitted.jitter(), 0.0);
  EXPECT_LE(fitted.jitter(), 1e-2);
  EXPECT_NEAR(fitted.posterior(pt({0.5})).mean, 2.0, 1e-4);
}

TEST(GaussianProcess, MatchesExplicitInverseOracle) {
  std::mt19937_64 rng(7);
  const auto x = random_points(rng, 5, 2);
  std::vector<double> y;
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t k = 0; k < x.size(); ++k) y.push_back(n(rng));
  const std::vector<double> ls{0.4, 0.6};
  GaussianProcess gp(RbfKernel(1.5, ls), 0.2, 1e-6);
  const auto fitted = gp.fit(x, y);
  for (const auto& q : random_points(rng, 10, 2)) {
    const auto got = fitted.posterior(q);
    const auto want = oracle::explicit_inverse_posterior(1.5, ls, 1e-6 + fitted.jitter(), 0.2, x, y, q);
    EXPECT_NEAR(got.mean, want.mean, 1e-8);
    EXPECT_NEAR(got.sd * got.sd, want.var, 1e-8);
  }
}

TEST(GaussianProcess, RecoversPriorFarFromData) {
  GaussianProcess gp(RbfKernel(4.0, {0.5, 0.5}), 1.25, 1e-6);
  const std::vector<ParameterPoint> x{pt({0, 0}), pt({0.5, 0.2})};
  const std::vector<double> y{3.0, -1.0};
  const auto post = gp.fit(x, y).posterior(pt({1e4, 1e4}));
  EXPECT_NEAR(post.mean, 1.25, 1e-9);
  EXPECT_NEAR(post.sd, 2.0, 1e-9);
}

TEST(GaussianProcess, UnfittedQueriesThrowStateError) {
  GaussianProcess gp(RbfKernel(1.0, {1.0}));
  EXPECT_THROW(gp.posterior(pt({0})), vabo::StateError);
  EXPECT_THROW(gp.size(), vabo::StateError);
}

TEST(GaussianProcess, RejectsBadData) {
  GaussianProcess gp(RbfKernel(1.0, {1.0}));
  const std::vector<ParameterPoint> none;
  const std::vector<double> no_values;
  EXPECT_THROW((void)gp.fit(none, no_values), std::invalid_argument);
  const std::vector<ParameterPoint> x{pt({0})};
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW((void)gp.fit(x, two), std::invalid_argument);
  const std::vector<ParameterPoint> wrong_dim{pt({0, 1})};
  const std::vector<double> one{1.0};
  EXPECT_THROW((void)gp.fit(wrong_dim, one), std::invalid_argument);
}

TEST(GaussianProcess, ObservingAPointCollapsesItsVariance) {
  std::mt19937_64 rng(11);
  auto x = random_points(rng, 6, 2);
  std::vector<double> y(x.size(), 0.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : y) v = n(rng);
  const ParameterPoint p = pt({0.123, 0.877});
  x.push_back(p);
  y.push_back(0.5);
  const auto fitted = GaussianProcess(RbfKernel(1.0, {0.3, 0.3}), 0.0, 0.0).fit(x, y);
  const double sd = fitted.posterior(p).sd;
  EXPECT_LE(sd * sd, 1e-10);
}

TEST(GaussianProcess, InvariantToDataOrder) {
  std::mt19937_64 rng(13);
  auto x = random_points(rng, 12, 3);
  std::vector<double> y;
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t k = 0; k < x.size(); ++k) y.push_back(n(rng));
  GaussianProcess gp(RbfKernel(2.0, {0.5, 0.4, 0.7}), 0.1, 1e-6);
  const auto a = gp.fit(x, y);
  std::vector<std::size_t> order(x.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ParameterPoint> xs;
  std::vector<double> ys;
  for (auto k : order) {
    xs.push_back(x[k]);
    ys.push_back(y[k]);
  }
  const auto b = gp.fit(xs, ys);
  for (const auto& q : random_points(rng, 20, 3)) {
    EXPECT_NEAR(a.posterior(q).mean, b.posterior(q).mean, 1e-9);
    EXPECT_NEAR(a.posterior(q).sd, b.posterior(q).sd, 1e-9);
  }
}

TEST(GaussianProcess, PosteriorSdIsFiniteAndNonNegative) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_points(rng, 30, 2);
    std::vector<double> y;
    std::normal_distribution<double> n(0.0, 10.0);
    for (std::size_t k = 0; k < x.size(); ++k) y.push_back(n(rng));
    const auto fitted = GaussianProcess(RbfKernel(100.0, {2.0, 2.0}), 0.0, 0.0).fit(x, y);
    for (const auto& q : random_points(rng, 50, 2)) {
      const double sd = fitted.posterior(q).sd;
      EXPECT_TRUE(std::isfinite(sd));
      EXPECT_GE(sd, 0.0);
    }
  }
}

TEST(GaussianProcess, FitLeavesOriginalUntouched) {
  GaussianProcess gp(RbfKernel(1.0, {1.0}));
  const std::vector<ParameterPoint> x{pt({0})};
  const std::vector<double> y{1.0};
  const auto fitted = gp.fit(x, y);
  EXPECT_FALSE(gp.is_fitted());
  EXPECT_TRUE(fitted.is_fitted());
}

TEST(Hyperparameters, RecoverLengthscaleOfSampledFunction) {
  // Draw 30 values from a GP with lengthscale 0.5 using an independent
  // Cholesky factorization, then ask the fitter to find it from a wrong start.
  const std::vector<double> true_ls{0.5};
  int recovered = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<ParameterPoint> x;
    for (int k = 0; k < 30; ++k) x.push_back(pt({u(rng)}));
    Eigen::MatrixXd k(30, 30);
    for (int i = 0; i < 30; ++i) {
      for (int j = 0; j < 30; ++j) k(i, j) = oracle::rbf(1.0, true_ls, x[i], x[j]);
      k(i, i) += 1e-8;
    }
    const Eigen::MatrixXd l = k.llt().matrixL();
    Eigen::VectorXd z(30);
    for (auto& v : z) v = n(rng);
    const Eigen::VectorXd f = l * z;
    const std::vector<double> y(f.data(), f.data() + f.size());

    const auto start = GaussianProcess(RbfKernel(1.0, {2.0}), 0.0, 1e-6).fit(x, y);
    const auto tuned = vabo::fit_hyperparameters(start);
    EXPECT_GE(tuned.log_marginal_likelihood(), start.log_marginal_likelihood());
    const double ls = tuned.kernel().lengthscales()[0];
    if (ls >= 0.25 && ls <= 1.0) ++recovered;
  }
  EXPECT_EQ(recovered, 5);
}

TEST(Hyperparameters, NeedThreePoints) {
  const std::vector<ParameterPoint> x{pt({0}), pt({1})};
  const std::vector<double> y{0.0, 1.0};
  const auto fitted = GaussianProcess(RbfKernel(1.0, {1.0})).fit(x, y);
  EXPECT_THROW((void)vabo::fit_hyperparameters(fitted), vabo::StateError);
  EXPECT_THROW((void)vabo::fit_hyperparameters(GaussianProcess(RbfKernel(1.0, {1.0}))), vabo::StateError);
}

TEST(Hyperparameters, FlatDataShrinksSignalVariance) {
  const std::vector<ParameterPoint> x{pt({0}), pt({0.3}), pt({0.6}), pt({1.0})};
  const std::vector<double> y(4, 2.5);
  const auto fitted = GaussianProcess(RbfKernel(1.0, {0.5}), 2.5).fit(x, y);
  const auto tuned = vabo::fit_hyperparameters(fitted);
  EXPECT_LT(tuned.kernel().signal_variance(), fitted.kernel().signal_variance());
  EXPECT_TRUE(std::isfinite(tuned.log_marginal_likelihood()));
  EXPECT_GE(tuned.log_marginal_likelihood(), fitted.log_marginal_likelihood());
}
