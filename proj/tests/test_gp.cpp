#include <doctest.h>

#include <cmath>

#include "rtprof/errors.hpp"
#include "rtprof/gaussian_process.hpp"

using namespace rtprof::gp;

TEST_CASE("matern kernel values") {
  const Matern52 k{2.0, 3.0};
  CHECK(k(1.0, 1.0) == doctest::Approx(3.0));
  const double h = 1.5, r = std::sqrt(5.0) * h / 2.0;
  CHECK(k(0.5, 2.0) == doctest::Approx(3.0 * (1 + r + r * r / 3.0) * std::exp(-r)).epsilon(1e-14));
  CHECK(k(0.5, 2.0) == k(2.0, 0.5));
}

TEST_CASE("posterior interpolates observations with small noise") {
  Eigen::VectorXd xs(3), ys(3);
  xs << 0.5, 1.5, 3.0;
  ys << 0.2, 0.9, -0.4;
  const Posterior post(Matern52{1.0, 1.0}, 1e-8, xs, ys);
  for (int i = 0; i < 3; ++i) {
    const auto [m, v] = post.predict(xs[i]);
    CHECK(m == doctest::Approx(ys[i]).epsilon(1e-5));
    CHECK(v < 1e-6);
  }
  CHECK(post.prior_mean() == doctest::Approx(ys.mean()));
  // Far away the posterior reverts to the prior.
  const auto [m_far, v_far] = post.predict(100.0);
  CHECK(m_far == doctest::Approx(ys.mean()));
  CHECK(v_far == doctest::Approx(1.0));
}

TEST_CASE("duplicate inputs take the jitter path") {
  Eigen::VectorXd xs(2), ys(2);
  xs << 1.0, 1.0;
  ys << 0.5, 0.5;
  const Posterior post(Matern52{1.0, 1.0}, 0.0, xs, ys);
  CHECK(post.jitter_retries() >= 1);
  const auto [m, v] = post.predict(2.0);
  CHECK(std::isfinite(m));
  CHECK(std::isfinite(v));
  CHECK(std::isfinite(post.log_marginal_likelihood()));
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(1.0, 0.0, 0.5) == doctest::Approx(0.5));
  CHECK(expected_improvement(0.0, 0.0, 0.5) == 0.0);
  // Zero mean gap: sigma * phi(0).
  CHECK(expected_improvement(0.5, 4.0, 0.5) == doctest::Approx(2.0 / std::sqrt(2 * M_PI)));
  CHECK(expected_improvement(0.0, 1.0, 0.0) < expected_improvement(0.0, 2.0, 0.0));
}
