#include "rtprof/student_t.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rtprof::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxTerms = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) {
      break;
    }
  }
  return h;
}

double log_beta_prefactor(double a, double b, double x) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
}

double student_t_pdf(double t, double df) {
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * std::numbers::pi);
  return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

// P(T > t) for t >= 0.
double upper_tail(double t, double df) {
  const double x = df / (df + t * t);
  return 0.5 * incomplete_beta(0.5 * df, 0.5, x);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete_beta requires a, b > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("incomplete_beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_beta_prefactor(a, b, x)) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_beta_prefactor(a, b, x)) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) {
    throw std::invalid_argument("student_t_cdf requires df > 0");
  }
  if (t >= 0.0) {
    return 1.0 - upper_tail(t, df);
  }
  return upper_tail(-t, df);
}

double student_t_quantile(double probability, double df) {
  if (!(probability > 0.0 && probability < 1.0)) {
    throw std::invalid_argument("student_t_quantile requires probability in (0, 1)");
  }
  if (!(df > 0.0)) {
    throw std::invalid_argument("student_t_quantile requires df > 0");
  }
  if (probability == 0.5) {
    return 0.0;
  }
  if (probability < 0.5) {
    return -student_t_quantile(1.0 - probability, df);
  }

  // Solve upper_tail(t) = tail for t > 0: safeguarded Newton inside a bisection bracket.
  const double tail = 1.0 - probability;
  double lo = 0.0;
  double hi = 1.0;
  while (upper_tail(hi, df) > tail) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) {
      throw std::domain_error("student_t_quantile did not bracket the root");
    }
  }
  double t = 0.5 * (lo + hi);
  for (int iteration = 0; iteration < 200; ++iteration) {
    const double f = upper_tail(t, df) - tail;
    if (f == 0.0) {
      return t;
    }
    if (f > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = t + f / student_t_pdf(t, df);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, t) || hi - lo <= 1e-15 * std::max(1.0, t)) {
      return next;
    }
    t = next;
  }
  return t;
}

}  // namespace rtprof::stats
