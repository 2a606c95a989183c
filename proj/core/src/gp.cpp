#include "vabo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

namespace vabo {

namespace {

constexpr double kFirstJitter = 1e-8;
constexpr double kLastJitter = 1e-2;
constexpr double kMinPivot = 1e-12;

void check_dimension(const RbfKernel& kernel, const ParameterPoint& p, const char* what) {
  if (static_cast<std::size_t>(p.size()) != kernel.dimension()) {
    std::ostringstream msg;
    msg << what << " has dimension " << p.size() << " but the kernel expects "
        << kernel.dimension();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

RbfKernel::RbfKernel(double signal_variance, std::vector<double> lengthscales)
    : signal_variance_(signal_variance), lengthscales_(std::move(lengthscales)) {
  if (!(signal_variance_ > 0.0) || !std::isfinite(signal_variance_)) {
    throw std::invalid_argument("signal_variance must be positive and finite");
  }
  if (lengthscales_.empty()) {
    throw std::invalid_argument("RBF kernel needs at least one lengthscale");
  }
  for (double l : lengthscales_) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("lengthscales must be positive and finite");
    }
  }
}

double RbfKernel::operator()(const ParameterPoint& a, const ParameterPoint& b) const {
  check_dimension(*this, a, "first kernel argument");
  check_dimension(*this, b, "second kernel argument");
  double r2 = 0.0;
  for (std::size_t d = 0; d < lengthscales_.size(); ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    const double u = (a[i] - b[i]) / lengthscales_[d];
    r2 += u * u;
  }
  return signal_variance_ * std::exp(-0.5 * r2);
}

double kernel_eval(const RbfKernel& kernel, const ParameterPoint& a, const ParameterPoint& b) {
  return kernel(a, b);
}

struct GaussianProcess::FitState {
  std::vector<ParameterPoint> inputs;
  Eigen::MatrixXd scaled;  // d x n, each column is an input divided by the lengthscales
  Eigen::VectorXd targets;
  Eigen::VectorXd residual;  // targets - prior_mean
  Eigen::MatrixXd lower;
  Eigen::VectorXd alpha;  // (K + s I)^-1 residual
  double jitter = 0.0;
  double log_marginal_likelihood = 0.0;
};

GaussianProcess::GaussianProcess(RbfKernel kernel, double prior_mean, double noise_variance)
    : kernel_(std::move(kernel)), prior_mean_(prior_mean), noise_variance_(noise_variance) {
  if (!(noise_variance_ >= 0.0) || !std::isfinite(noise_variance_)) {
    throw std::invalid_argument("noise_variance must be nonnegative and finite");
  }
  if (!std::isfinite(prior_mean_)) {
    throw std::invalid_argument("prior_mean must be finite");
  }
}

GaussianProcess GaussianProcess::fit(std::span<const ParameterPoint> inputs,
                                     std::span<const double> targets) const {
  if (inputs.empty()) throw std::invalid_argument("cannot fit a GP on an empty data set");
  if (inputs.size() != targets.size()) {
    throw std::invalid_argument("GP inputs and targets have different lengths");
  }
  const std::size_t n = inputs.size();
  const std::size_t dim = kernel_.dimension();
  const auto ni = static_cast<Eigen::Index>(n);
  const auto di = static_cast<Eigen::Index>(dim);

  auto state = std::make_shared<FitState>();
  state->inputs.assign(inputs.begin(), inputs.end());
  state->scaled.resize(di, ni);
  state->targets.resize(ni);
  for (std::size_t j = 0; j < n; ++j) {
    check_dimension(kernel_, inputs[j], "GP training input");
    if (!inputs[j].allFinite() || !std::isfinite(targets[j])) {
      throw std::invalid_argument("GP training data must be finite");
    }
    for (std::size_t d = 0; d < dim; ++d) {
      state->scaled(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) =
          inputs[j][static_cast<Eigen::Index>(d)] / kernel_.lengthscales()[d];
    }
    state->targets[static_cast<Eigen::Index>(j)] = targets[j];
  }
  state->residual = state->targets.array() - prior_mean_;

  const double sv = kernel_.signal_variance();
  Eigen::MatrixXd gram(ni, ni);
  for (Eigen::Index a = 0; a < ni; ++a) {
    gram(a, a) = sv;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double k = sv * std::exp(-0.5 * (state->scaled.col(a) - state->scaled.col(b)).squaredNorm());
      gram(a, b) = k;
      gram(b, a) = k;
    }
  }

  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd regularized = gram;
    regularized.diagonal().array() += noise_variance_ + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(regularized);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      const double min_pivot = lower.diagonal().array().square().minCoeff();
      if (std::isfinite(min_pivot) && min_pivot >= kMinPivot * sv) {
        state->lower = std::move(lower);
        state->jitter = jitter;
        break;
      }
    }
    if (jitter == 0.0) {
      jitter = kFirstJitter * sv;
    } else if (jitter < kLastJitter * sv * (1.0 - 1e-9)) {
      jitter *= 10.0;
    } else {
      std::ostringstream msg;
      msg << "GP Gram matrix is not positive definite after jitter " << jitter << " (= "
          << jitter / sv << " x signal_variance)";
      throw NumericalError(msg.str());
    }
  }

  const double diagonal_shift = noise_variance_ + state->jitter;
  auto solve = [&](const Eigen::VectorXd& rhs) {
    const Eigen::VectorXd half = state->lower.triangularView<Eigen::Lower>().solve(rhs);
    return Eigen::VectorXd(state->lower.transpose().triangularView<Eigen::Upper>().solve(half));
  };
  state->alpha = solve(state->residual);
  // Gram matrices with tiny noise are badly conditioned; a couple of refinement
  // steps with an extended-precision residual recover most of the lost digits.
  for (int step = 0; step < 2; ++step) {
    Eigen::VectorXd correction(ni);
    for (Eigen::Index a = 0; a < ni; ++a) {
      long double acc = static_cast<long double>(state->residual[a]) -
                        static_cast<long double>(diagonal_shift) * state->alpha[a];
      for (Eigen::Index b = 0; b < ni; ++b) acc -= static_cast<long double>(gram(a, b)) * state->alpha[b];
      correction[a] = static_cast<double>(acc);
    }
    state->alpha += solve(correction);
  }
  state->log_marginal_likelihood = -0.5 * state->residual.dot(state->alpha) -
                                   state->lower.diagonal().array().log().sum() -
                                   0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  GaussianProcess out = *this;
  out.fit_ = std::move(state);
  return out;
}

GaussianProcess GaussianProcess::refit_with(const RbfKernel& kernel) const {
  const FitState& s = state();
  GaussianProcess fresh(kernel, prior_mean_, noise_variance_);
  std::vector<double> y(s.targets.data(), s.targets.data() + s.targets.size());
  return fresh.fit(s.inputs, y);
}

Posterior GaussianProcess::posterior(const ParameterPoint& query) const {
  const FitState& s = state();
  check_dimension(kernel_, query, "GP query point");
  const auto di = static_cast<Eigen::Index>(kernel_.dimension());
  Eigen::VectorXd q(di);
  for (Eigen::Index d = 0; d < di; ++d) q[d] = query[d] / kernel_.lengthscales()[static_cast<std::size_t>(d)];

  const double sv = kernel_.signal_variance();
  const Eigen::Index n = s.scaled.cols();
  Eigen::VectorXd k(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k[j] = sv * std::exp(-0.5 * (s.scaled.col(j) - q).squaredNorm());
  }
  Posterior out;
  long double mean = prior_mean_;
  for (Eigen::Index j = 0; j < n; ++j) mean += static_cast<long double>(k[j]) * s.alpha[j];
  out.mean = static_cast<double>(mean);
  const Eigen::VectorXd v = s.lower.triangularView<Eigen::Lower>().solve(k);
  const double variance = sv - v.squaredNorm();
  out.sd = variance > 0.0 ? std::sqrt(variance) : 0.0;
  if (!std::isfinite(out.mean) || !std::isfinite(out.sd)) {
    throw NumericalError("GP posterior is not finite at " + to_string(query));
  }
  return out;
}

const GaussianProcess::FitState& GaussianProcess::state() const {
  if (!fit_) throw StateError("Gaussian process has not been fitted");
  return *fit_;
}

std::size_t GaussianProcess::size() const { return state().inputs.size(); }
double GaussianProcess::jitter() const { return state().jitter; }
double GaussianProcess::log_marginal_likelihood() const { return state().log_marginal_likelihood; }
const std::vector<ParameterPoint>& GaussianProcess::inputs() const { return state().inputs; }
const Eigen::VectorXd& GaussianProcess::targets() const { return state().targets; }
const Eigen::MatrixXd& GaussianProcess::cholesky_factor() const { return state().lower; }

Eigen::MatrixXd GaussianProcess::regularized_gram() const {
  const FitState& s = state();
  const auto n = static_cast<Eigen::Index>(s.inputs.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      gram(a, b) = kernel_(s.inputs[static_cast<std::size_t>(a)], s.inputs[static_cast<std::size_t>(b)]);
    }
  }
  gram.diagonal().array() += noise_variance_ + s.jitter;
  return gram;
}

GaussianProcess fit(const GaussianProcess& gp, std::span<const ParameterPoint> inputs,
                    std::span<const double> targets) {
  return gp.fit(inputs, targets);
}

Posterior posterior(const GaussianProcess& gp, const ParameterPoint& query) {
  return gp.posterior(query);
}

namespace {

struct LogBounds {
  std::vector<double> low;
  std::vector<double> high;
};

double evaluate_lml(const GaussianProcess& base, const std::vector<double>& log_params) {
  std::vector<double> lengthscales(log_params.size() - 1);
  for (std::size_t d = 0; d + 1 < log_params.size(); ++d) lengthscales[d] = std::exp(log_params[d + 1]);
  try {
    const GaussianProcess candidate = base.refit_with(RbfKernel(std::exp(log_params[0]), lengthscales));
    const double lml = candidate.log_marginal_likelihood();
    return std::isfinite(lml) ? lml : -std::numeric_limits<double>::infinity();
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

GaussianProcess fit_hyperparameters(const GaussianProcess& gp, const HyperparameterSearch& search) {
  if (!gp.is_fitted() || gp.size() < 3) {
    throw StateError("hyperparameter fitting needs a GP fitted on at least 3 points");
  }
  const std::size_t dim = gp.kernel().dimension();
  const std::size_t num_params = dim + 1;

  LogBounds bounds;
  const Eigen::VectorXd residual = gp.targets().array() - gp.prior_mean();
  const double scale = std::max(residual.squaredNorm() / static_cast<double>(residual.size()), 1e-12);
  bounds.low.push_back(std::log(search.signal_variance_low * scale));
  bounds.high.push_back(std::log(search.signal_variance_high * scale));
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& x : gp.inputs()) {
      lo = std::min(lo, x[static_cast<Eigen::Index>(d)]);
      hi = std::max(hi, x[static_cast<Eigen::Index>(d)]);
    }
    const double extent = hi > lo ? hi - lo : 1.0;
    bounds.low.push_back(std::log(search.lengthscale_low * extent));
    bounds.high.push_back(std::log(search.lengthscale_high * extent));
  }

  // Cap the grid at ~4096 candidates regardless of dimension.
  std::size_t per_axis = std::max<std::size_t>(search.grid_points, 2);
  while (per_axis > 2 && std::pow(static_cast<double>(per_axis), static_cast<double>(num_params)) > 4096.0) {
    --per_axis;
  }

  std::vector<double> best(num_params);
  double best_lml = -std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (std::size_t p = 0; p < num_params; ++p) total *= per_axis;
  std::vector<double> candidate(num_params);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t p = num_params; p-- > 0;) {
      const double frac = static_cast<double>(rest % per_axis) / static_cast<double>(per_axis - 1);
      rest /= per_axis;
      candidate[p] = bounds.low[p] + frac * (bounds.high[p] - bounds.low[p]);
    }
    const double lml = evaluate_lml(gp, candidate);
    if (lml > best_lml) {
      best_lml = lml;
      best = candidate;
    }
  }

  if (std::isfinite(best_lml)) {
    double step = std::log(2.0);
    const double min_step = std::log(1.01);
    for (std::size_t sweep = 0; sweep < search.max_sweeps && step >= min_step; ++sweep) {
      bool improved = false;
      for (std::size_t p = 0; p < num_params; ++p) {
        for (const double direction : {+1.0, -1.0}) {
          std::vector<double> trial = best;
          trial[p] = std::clamp(trial[p] + direction * step, bounds.low[p], bounds.high[p]);
          if (trial[p] == best[p]) continue;
          const double lml = evaluate_lml(gp, trial);
          if (lml > best_lml) {
            best_lml = lml;
            best = std::move(trial);
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }

  if (!(best_lml > gp.log_marginal_likelihood())) return gp;
  std::vector<double> lengthscales(dim);
  for (std::size_t d = 0; d < dim; ++d) lengthscales[d] = std::exp(best[d + 1]);
  return gp.refit_with(RbfKernel(std::exp(best[0]), lengthscales));
}

}  // namespace vabo
