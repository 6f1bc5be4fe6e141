#include "rtprof/stopping.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rtprof/student_t.hpp"

namespace rtprof {

SampleSummary running_stats(std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("running_stats requires at least one sample");
  }
  RunningStats acc;
  for (double x : samples) {
    acc.push(x);
  }
  return SampleSummary{acc.mean(), acc.variance(), acc.count()};
}

void StoppingRule::validate() const {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw std::invalid_argument("stopping.confidence_level must be in (0, 1)");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("stopping.lambda must be in (0, 1)");
  }
  if (min_samples < 2) {
    throw std::invalid_argument("stopping.min_samples must be at least 2");
  }
  if (min_samples > max_samples) {
    throw std::invalid_argument("stopping.min_samples must not exceed stopping.max_samples");
  }
}

StoppingRule StoppingRule::fixed(std::size_t n, double confidence_level) {
  StoppingRule rule;
  rule.confidence_level = confidence_level;
  rule.min_samples = n;
  rule.max_samples = n;
  return rule;
}

double ci_width(double mean, double variance, std::size_t n, double confidence_level) {
  (void)mean;
  if (n < 2) {
    throw std::invalid_argument("ci_width requires at least two samples");
  }
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw std::invalid_argument("confidence level must be in (0, 1)");
  }
  if (!(variance >= 0.0)) {
    throw std::invalid_argument("variance must be non-negative");
  }
  if (variance == 0.0) {
    return 0.0;
  }
  const double t = stats::student_t_quantile(0.5 * (1.0 + confidence_level), static_cast<double>(n - 1));
  return 2.0 * t * std::sqrt(variance / static_cast<double>(n));
}

bool should_stop(const SampleSummary& s, const StoppingRule& rule) {
  if (!(s.mean > 0.0)) {
    throw std::invalid_argument("should_stop requires a positive mean runtime");
  }
  if (s.n < rule.min_samples) {
    return false;
  }
  if (s.n >= rule.max_samples) {
    return true;
  }
  return ci_width(s.mean, s.variance, s.n, rule.confidence_level) < rule.lambda * s.mean;
}

StoppingMonitor::StoppingMonitor(StoppingRule rule) : rule_(rule) { rule_.validate(); }

double StoppingMonitor::quantile(std::size_t df) const {
  if (df != cached_df_) {
    cached_quantile_ = stats::student_t_quantile(0.5 * (1.0 + rule_.confidence_level), static_cast<double>(df));
    cached_df_ = df;
  }
  return cached_quantile_;
}

double StoppingMonitor::current_ci_width() const {
  const std::size_t n = stats_.count();
  if (n < 2) {
    return 0.0;
  }
  const double variance = stats_.variance();
  if (variance == 0.0) {
    return 0.0;
  }
  return 2.0 * quantile(n - 1) * std::sqrt(variance / static_cast<double>(n));
}

bool StoppingMonitor::push(double sample) {
  stats_.push(sample);
  const std::size_t n = stats_.count();
  if (n < rule_.min_samples) {
    return false;
  }
  if (!(stats_.mean() > 0.0)) {
    throw std::invalid_argument("per-sample runtimes must be positive");
  }
  if (n >= rule_.max_samples) {
    return true;
  }
  return current_ci_width() < rule_.lambda * stats_.mean();
}

void to_json(nlohmann::json& j, const StoppingRule& r) {
  j = nlohmann::json{{"confidence_level", r.confidence_level},
                     {"lambda", r.lambda},
                     {"min_samples", r.min_samples},
                     {"max_samples", r.max_samples}};
}

void from_json(const nlohmann::json& j, StoppingRule& r) {
  StoppingRule defaults;
  r.confidence_level = j.value("confidence_level", defaults.confidence_level);
  r.lambda = j.value("lambda", defaults.lambda);
  r.min_samples = j.value("min_samples", defaults.min_samples);
  r.max_samples = j.value("max_samples", defaults.max_samples);
}

}  // namespace rtprof
