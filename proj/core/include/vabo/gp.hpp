#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vabo/types.hpp"

namespace vabo {

inline constexpr double kDefaultNoiseVariance = 1e-6;

/// Squared-exponential (RBF) kernel with one lengthscale per input dimension:
///
///   k(a, b) = signal_variance * exp(-1/2 * sum_d ((a_d - b_d) / lengthscale_d)^2)
class RbfKernel {
 public:
  RbfKernel(double signal_variance, std::vector<double> lengthscales);

  /// Throws std::invalid_argument if either point's dimension differs from
  /// the number of lengthscales.
  double operator()(const ParameterPoint& a, const ParameterPoint& b) const;

  double signal_variance() const { return signal_variance_; }
  const std::vector<double>& lengthscales() const { return lengthscales_; }
  std::size_t dimension() const { return lengthscales_.size(); }

 private:
  double signal_variance_;
  std::vector<double> lengthscales_;
};

double kernel_eval(const RbfKernel& kernel, const ParameterPoint& a, const ParameterPoint& b);

/// Prior settings for one modelled function. A missing prior_mean lets the
/// caller pick a data-driven default (the optimizer uses the empirical mean
/// for the objective and 0 for constraints).
struct GpSettings {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double noise_variance = kDefaultNoiseVariance;
  std::optional<double> prior_mean;
};

struct Posterior {
  double mean = 0.0;
  double sd = 0.0;
};

/// Exact GP regression with a constant prior mean.
///
/// Values are immutable: fit() returns a new, fitted GP and the original is
/// untouched, so a fitted GP can be queried from several threads at once.
///
/// Fitting factors K + (noise_variance + jitter) I with a Cholesky
/// decomposition. The first attempt uses no jitter; if the factorization fails
/// or produces a pivot below 1e-12 * signal_variance, jitter is set to
/// 1e-8 * signal_variance and raised tenfold up to 1e-2 * signal_variance.
/// Duplicate inputs with noise_variance == 0 therefore succeed with a small
/// jitter, and the posterior mean at the duplicate is the average of the
/// observed values.
class GaussianProcess {
 public:
  explicit GaussianProcess(RbfKernel kernel, double prior_mean = 0.0,
                           double noise_variance = kDefaultNoiseVariance);

  /// Throws std::invalid_argument on empty or inconsistent data, NumericalError
  /// when the jitter ladder is exhausted.
  [[nodiscard]] GaussianProcess fit(std::span<const ParameterPoint> inputs,
                                    std::span<const double> targets) const;

  /// Same settings and data, different kernel. Requires a fitted GP.
  [[nodiscard]] GaussianProcess refit_with(const RbfKernel& kernel) const;

  /// Throws StateError when unfitted.
  Posterior posterior(const ParameterPoint& query) const;

  bool is_fitted() const { return fit_ != nullptr; }
  const RbfKernel& kernel() const { return kernel_; }
  double prior_mean() const { return prior_mean_; }
  double noise_variance() const { return noise_variance_; }

  // The accessors below require a fitted GP.
  std::size_t size() const;
  double jitter() const;
  double log_marginal_likelihood() const;
  const std::vector<ParameterPoint>& inputs() const;
  const Eigen::VectorXd& targets() const;
  /// Lower-triangular L with L L^T = K + (noise_variance + jitter) I.
  const Eigen::MatrixXd& cholesky_factor() const;
  Eigen::MatrixXd regularized_gram() const;

 private:
  struct FitState;

  const FitState& state() const;

  RbfKernel kernel_;
  double prior_mean_;
  double noise_variance_;
  std::shared_ptr<const FitState> fit_;
};

GaussianProcess fit(const GaussianProcess& gp, std::span<const ParameterPoint> inputs,
                    std::span<const double> targets);
Posterior posterior(const GaussianProcess& gp, const ParameterPoint& query);

struct HyperparameterSearch {
  /// Log-spaced grid points per hyperparameter before refinement.
  std::size_t grid_points = 5;
  /// Coordinate-descent sweeps after the grid.
  std::size_t max_sweeps = 40;
  /// Signal variance bounds, as multiples of mean(squared centered target).
  double signal_variance_low = 1e-3;
  double signal_variance_high = 1e2;
  /// Lengthscale bounds, as multiples of the data extent in each dimension.
  double lengthscale_low = 1e-2;
  double lengthscale_high = 1e1;
};

/// Maximizes the log marginal likelihood over (signal_variance, lengthscales)
/// in a bounded box: a log-spaced grid search followed by multiplicative
/// coordinate descent. Noise variance and prior mean are kept. The result
/// never has a lower log marginal likelihood than the input; if no candidate
/// can be factored the input is returned unchanged.
///
/// Throws StateError unless gp is fitted on at least 3 points.
GaussianProcess fit_hyperparameters(const GaussianProcess& gp,
                                    const HyperparameterSearch& search = {});

}  // namespace vabo
