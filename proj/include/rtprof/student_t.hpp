#pragma once

namespace rtprof::stats {

// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double incomplete_beta(double a, double b, double x);

// Student-t cumulative distribution with `df` degrees of freedom.
double student_t_cdf(double t, double df);

// Inverse of student_t_cdf for probability in (0, 1), absolute accuracy ~1e-12.
double student_t_quantile(double probability, double df);

}  // namespace rtprof::stats
