#pragma once

#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace rtprof::gp {

/// Matern-5/2: s2 * (1 + sqrt5 h / l + 5 h^2 / (3 l^2)) * exp(-sqrt5 h / l), h = |x - x'|.
struct Matern52 {
  double length_scale = 1.0;
  double signal_variance = 1.0;

  double operator()(double x, double y) const;
};

Eigen::MatrixXd gram(const Matern52& kernel, const Eigen::VectorXd& xs);

/// GP regression with a constant prior mean equal to the mean of the observations.
class Posterior {
 public:
  // Throws NumericalFailure if the Gram matrix stays indefinite after three jitter retries.
  Posterior(Matern52 kernel, double noise_variance, Eigen::VectorXd xs, Eigen::VectorXd ys);

  // Predictive mean and variance of the latent function at x.
  std::pair<double, double> predict(double x) const;

  double log_marginal_likelihood() const;
  int jitter_retries() const { return jitter_retries_; }
  double prior_mean() const { return prior_mean_; }

 private:
  Matern52 kernel_;
  Eigen::VectorXd xs_;
  Eigen::VectorXd centered_;
  double prior_mean_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  int jitter_retries_ = 0;
};

/// Expected improvement of a maximization problem over `best`.
double expected_improvement(double mean, double variance, double best);

}  // namespace rtprof::gp
