#pragma once

#include <cstddef>
#include <span>

#include <json.hpp>

namespace rtprof {

/// Single-pass mean and unbiased variance (Welford).
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  // Unbiased (n - 1) sample variance; 0 for fewer than two samples.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n = 0;
};

SampleSummary running_stats(std::span<const double> samples);

/// Stop probing a limitation once the t confidence interval of the mean is narrower
/// than `lambda` times the mean.
struct StoppingRule {
  double confidence_level = 0.95;
  double lambda = 0.10;
  std::size_t min_samples = 30;
  std::size_t max_samples = 10000;

  void validate() const;

  // A rule that always draws exactly `n` samples.
  static StoppingRule fixed(std::size_t n, double confidence_level = 0.95);
};

/// Full width of the two-sided t interval: 2 * t_{(1+conf)/2, n-1} * sqrt(variance / n).
double ci_width(double mean, double variance, std::size_t n, double confidence_level);

bool should_stop(const SampleSummary& stats, const StoppingRule& rule);

/// Caches t quantiles per degree of freedom for one rule so the per-sample check is O(1)
/// amortized. Not thread-safe; use one per probe.
class StoppingMonitor {
 public:
  explicit StoppingMonitor(StoppingRule rule);

  // Adds a sample and reports whether the probe may stop.
  bool push(double sample);

  const RunningStats& stats() const { return stats_; }
  const StoppingRule& rule() const { return rule_; }
  double current_ci_width() const;

 private:
  double quantile(std::size_t df) const;

  StoppingRule rule_;
  RunningStats stats_;
  mutable std::size_t cached_df_ = 0;
  mutable double cached_quantile_ = 0.0;
};

void to_json(nlohmann::json& j, const StoppingRule& rule);
void from_json(const nlohmann::json& j, StoppingRule& rule);

}  // namespace rtprof
