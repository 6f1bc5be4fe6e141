#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rtprof/grid.hpp"
#include "rtprof/model.hpp"
#include "rtprof/stopping.hpp"

namespace rtprof {

enum class StrategyKind { Nms, BinarySearch, BayesOpt, Random };

std::string_view to_string(StrategyKind kind);
// Accepts "nms", "bs", "bo", "random" (and the long names); throws std::invalid_argument.
StrategyKind parse_strategy(std::string_view name);

struct InitialLimits {
  std::vector<double> limits;  // selection order; limits[0] is the synthetic-target limit l_p
  double synthetic_limit = 0.0;
  std::vector<std::string> warnings;
};

/// Chooses `n` grid limits to profile in parallel, unique and summing to at most l_max.
/// Throws InfeasibleConfiguration when the grid cannot accommodate them.
InitialLimits initial_limits(double p, int n, const LimitGrid& grid);

struct SyntheticTarget {
  double runtime = 0.0;
  std::optional<std::string> warning;
};

/// The runtime observed at l_p becomes the target for all sequential steps.
SyntheticTarget synthetic_target(const ProfilePoint& at_synthetic_limit, const LimitGrid& grid,
                                 const StoppingRule& rule);

/// Observation transform for Bayesian optimization: r/t when the target holds, -(r/t) otherwise.
double transform_observation(double runtime, double target);

struct NmsState {
  std::optional<RuntimeModel> model;
  std::size_t fitted_on = 0;
  bool target_unreachable = false;
};

struct BinarySearchState {
  // Inclusive bracket of grid indices; empty when lower > upper.
  long lower = 0;
  long upper = -1;
  std::optional<std::size_t> pending;
};

struct BayesOptState {
  double length_scale = 0.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-4;
  std::vector<double> transformed;
};

struct RandomState {
  std::uint64_t seed = 0;
};

struct StrategyState {
  StrategyKind kind = StrategyKind::Nms;
  std::vector<ProfilePoint> observed;
  double target_runtime = 0.0;
  std::variant<NmsState, BinarySearchState, BayesOptState, RandomState> detail;

  std::vector<double> observed_limits() const;
};

StrategyState make_strategy_state(StrategyKind kind, double target_runtime, const LimitGrid& grid,
                                  std::uint64_t seed);

/// Appends a probed point. Binary search narrows its bracket when the point is its pending probe.
void record(StrategyState& state, const ProfilePoint& point, const LimitGrid& grid);

/// Next limit to probe, or std::nullopt once the strategy has nothing left to propose.
std::optional<double> next_limit(StrategyState& state, const LimitGrid& grid);

std::optional<double> next_limit_nms(StrategyState& state, const LimitGrid& grid);
std::optional<double> next_limit_bs(StrategyState& state, const LimitGrid& grid);
std::optional<double> next_limit_bo(StrategyState& state, const LimitGrid& grid);
std::optional<double> next_limit_random(const StrategyState& state, const LimitGrid& grid);

}  // namespace rtprof
