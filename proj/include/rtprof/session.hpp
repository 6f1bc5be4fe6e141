#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rtprof/grid.hpp"
#include "rtprof/model.hpp"
#include "rtprof/oracle.hpp"
#include "rtprof/selection.hpp"
#include "rtprof/stopping.hpp"

namespace rtprof {

struct ProfilingConfig {
  LimitGrid grid{0.1, 4.0, 0.1};
  int n_initial = 3;
  double p = 0.05;
  StrategyKind strategy = StrategyKind::Nms;
  StoppingRule stopping;
  int max_steps = 8;  // total probes, initial ones included
  std::uint64_t seed = 0;
  // Run the initial probes on worker threads when the oracle allows it.
  bool concurrent_initial = true;

  void validate() const;
};

struct ProbeRecord {
  std::size_t step = 0;  // 1-based position in the probe sequence
  ProfilePoint point;
  double duration_seconds = 0.0;
  bool initial = false;
};

struct StepModel {
  std::size_t step = 0;  // number of probes the model was fitted on
  RuntimeModel model;
  double residual_norm = 0.0;
  double accounted_time = 0.0;  // profiling time spent up to and including this step
  std::optional<double> smape;
};

struct SessionReport {
  std::vector<ProbeRecord> probes;
  std::vector<StepModel> models;  // models[k] is fitted on the first n_initial + k probes
  double synthetic_limit = 0.0;
  double target_runtime = 0.0;
  double total_time = 0.0;
  bool exhausted = false;
  std::vector<std::string> warnings;

  const RuntimeModel& final_model() const { return models.back().model; }
};

/// One profiling session: parallel initial probes, synthetic target, then strategy steps
/// with a refit after every probe. When `reference` holds true runtimes over the whole grid,
/// every step model is scored with SMAPE against it.
SessionReport run_session(const JobOracle& oracle, const ProfilingConfig& config,
                          const std::optional<Eigen::ArrayXd>& reference = std::nullopt);

struct NamedConfig {
  std::string label;
  ProfilingConfig config;
};

struct BenchmarkRow {
  std::string config;
  StrategyKind strategy = StrategyKind::Nms;
  std::size_t step = 0;
  std::size_t repetition = 0;
  double smape = 0.0;
  double time_seconds = 0.0;
};

struct WinCount {
  StrategyKind strategy = StrategyKind::Nms;
  std::size_t step = 0;
  int wins_0 = 0;
  int wins_10 = 0;
};

struct BenchmarkFailure {
  std::string config;
  StrategyKind strategy = StrategyKind::Nms;
  std::size_t repetition = 0;
  std::string error;
};

struct BenchmarkReport {
  std::vector<std::string> configs;
  std::vector<StrategyKind> strategies;
  std::size_t repetitions = 0;
  std::uint64_t master_seed = 0;
  std::vector<BenchmarkRow> rows;  // ordered by config, repetition, strategy, step
  std::vector<WinCount> wins;      // ordered by strategy, step
  std::vector<BenchmarkFailure> failures;
};

// Builds the job for one (config, repetition); every strategy of that cell probes the same job.
using OracleFactory = std::function<std::unique_ptr<JobOracle>(const NamedConfig&, std::uint64_t seed)>;

/// Runs configs x repetitions x strategies. Seeds derive from `master_seed` only.
/// Win cells are (config, repetition, step); near-wins use a 10% relative tolerance.
BenchmarkReport run_benchmark(const OracleFactory& make_oracle, const std::vector<NamedConfig>& configs,
                              const std::vector<StrategyKind>& strategies, std::size_t repetitions,
                              std::uint64_t master_seed);

inline constexpr double kNearWinTolerance = 0.10;

void to_json(nlohmann::json& j, const ProfilingConfig& config);
void to_json(nlohmann::json& j, const SessionReport& report);
void to_json(nlohmann::json& j, const BenchmarkReport& report);

void write_smape_csv(std::ostream& out, const BenchmarkReport& report);
void write_time_csv(std::ostream& out, const BenchmarkReport& report);
void write_wins_csv(std::ostream& out, const BenchmarkReport& report);

}  // namespace rtprof
