#include "rtprof/gaussian_process.hpp"

#include <cmath>
#include <numbers>

#include "rtprof/errors.hpp"

namespace rtprof::gp {

double Matern52::operator()(double x, double y) const {
  const double r = std::sqrt(5.0) * std::abs(x - y) / length_scale;
  return signal_variance * (1.0 + r + r * r / 3.0) * std::exp(-r);
}

Eigen::MatrixXd gram(const Matern52& kernel, const Eigen::VectorXd& xs) {
  const Eigen::Index n = xs.size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel(xs[i], xs[j]);
    }
  }
  return k;
}

Posterior::Posterior(Matern52 kernel, double noise_variance, Eigen::VectorXd xs, Eigen::VectorXd ys)
    : kernel_(kernel), xs_(std::move(xs)) {
  prior_mean_ = ys.mean();
  centered_ = ys.array() - prior_mean_;

  Eigen::MatrixXd k = gram(kernel_, xs_);
  k.diagonal().array() += noise_variance;
  llt_.compute(k);
  double jitter = 1e-8 * kernel_.signal_variance;
  while (llt_.info() != Eigen::Success) {
    if (jitter_retries_ == 3) {
      throw NumericalFailure("GP kernel matrix is singular after jitter retries");
    }
    ++jitter_retries_;
    k.diagonal().array() += jitter;
    jitter *= 10.0;
    llt_.compute(k);
  }
  alpha_ = llt_.solve(centered_);
}

std::pair<double, double> Posterior::predict(double x) const {
  Eigen::VectorXd k_star(xs_.size());
  for (Eigen::Index i = 0; i < xs_.size(); ++i) {
    k_star[i] = kernel_(x, xs_[i]);
  }
  const double mean = prior_mean_ + k_star.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(k_star);
  const double variance = std::max(kernel_(x, x) - v.squaredNorm(), 0.0);
  return {mean, variance};
}

double Posterior::log_marginal_likelihood() const {
  const Eigen::Index n = centered_.size();
  const double log_det = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  return -0.5 * centered_.dot(alpha_) - 0.5 * log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double expected_improvement(double mean, double variance, double best) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double gain = mean - best;
  if (sigma <= 0.0) {
    return std::max(gain, 0.0);
  }
  const double z = gain / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return gain * cdf + sigma * pdf;
}

}  // namespace rtprof::gp
