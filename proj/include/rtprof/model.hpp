#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "rtprof/errors.hpp"
#include "rtprof/grid.hpp"

namespace rtprof {

/// One probed CPU limitation and the statistics of its per-sample runtimes.
struct ProfilePoint {
  double cpu_limit = 0.0;      // vCPU
  double mean_runtime = 0.0;   // seconds per sample
  std::size_t n_samples = 0;
  double sample_variance = 0.0;  // seconds^2, unbiased
  double ci_width = 0.0;         // seconds, at the rule's confidence level
};

/// Member of the tiered runtime function family
///
///   tier 1: R^-1
///   tier 2: a * R^-1
///   tier 3: a * R^-b
///   tier 4: a * R^-b + c
///   tier 5: a * (R * d)^-b + c
///
/// Inactive parameters hold their neutral values a = 1, b = 1, c = 0, d = 1.
struct RuntimeModel {
  int tier = 1;
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;
  double d = 1.0;

  static RuntimeModel neutral(int tier);

  // Throws std::invalid_argument when the tier or a parameter is out of domain.
  void validate() const;

  friend bool operator==(const RuntimeModel&, const RuntimeModel&) = default;
};

double eval(const RuntimeModel& model, double limit);

template <typename Derived>
Eigen::ArrayXd eval(const RuntimeModel& model, const Eigen::ArrayBase<Derived>& limits) {
  Eigen::ArrayXd out(limits.size());
  for (Eigen::Index i = 0; i < limits.size(); ++i) {
    out[i] = eval(model, static_cast<double>(limits.derived().coeff(i)));
  }
  return out;
}

/// Tier for a given number of distinct profiled limitations: min(n, 5).
int select_tier(std::size_t n_points);

/// Number of free parameters of a tier (0 for tier 1, 4 for tier 5).
int active_parameter_count(int tier);

struct FitResult {
  RuntimeModel model;
  double residual_norm = 0.0;  // sqrt of the sum of squared residuals
  int iterations = 0;
  bool converged = true;
};

/// Raised when the residual becomes non-finite; carries the last finite iterate.
class FitFailure : public NumericalFailure {
 public:
  FitFailure(const std::string& what, RuntimeModel last_iterate)
      : NumericalFailure(what), last_iterate_(last_iterate) {}
  const RuntimeModel& last_iterate() const { return last_iterate_; }

 private:
  RuntimeModel last_iterate_;
};

/// Least-squares fit of the tier selected by the number of points.
///
/// Tier 1 has nothing to fit and tier 2 has a closed form. Tiers 3-5 run a bounded,
/// damped Gauss-Newton (Levenberg-Marquardt) iteration in log-space for a, b and d.
/// Parameters shared with `warm_start` seed that iteration; newly activated ones start
/// neutral. A data-driven cold start is also run and the lower residual wins.
FitResult fit(std::span<const ProfilePoint> points,
              const std::optional<RuntimeModel>& warm_start = std::nullopt);

FitResult fit(std::span<const double> limits, std::span<const double> runtimes,
              const std::optional<RuntimeModel>& warm_start = std::nullopt);

/// Solves eval(model, R) = target for R. std::nullopt when target <= c (tier >= 4).
std::optional<double> invert_unclamped(const RuntimeModel& model, double target_runtime);

struct Inversion {
  double limit = 0.0;
  bool unreachable = false;
};

/// invert_unclamped, clamped into [l_min, l_max] and snapped to the grid.
/// An unreachable target yields l_max with `unreachable` set.
Inversion invert(const RuntimeModel& model, double target_runtime, const LimitGrid& grid);

void to_json(nlohmann::json& j, const RuntimeModel& model);
void from_json(const nlohmann::json& j, RuntimeModel& model);

void to_json(nlohmann::json& j, const ProfilePoint& point);
void from_json(const nlohmann::json& j, ProfilePoint& point);

std::string describe(const RuntimeModel& model);

}  // namespace rtprof
