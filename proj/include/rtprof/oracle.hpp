#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rtprof/grid.hpp"
#include "rtprof/model.hpp"
#include "rtprof/stopping.hpp"

namespace rtprof {

/// Per-probe source of per-sample runtimes.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual double next() = 0;
  // Time charged for the probe. Simulated sources charge the sum of their samples.
  virtual double accounted_duration(double sample_sum) { return sample_sum; }
};

/// A black-box job: yields per-sample runtimes under a CPU limitation.
class JobOracle {
 public:
  virtual ~JobOracle() = default;

  virtual const LimitGrid& grid() const = 0;
  virtual bool supports_parallel() const = 0;

  // Starts a fresh probe at an on-grid limit.
  virtual std::unique_ptr<SampleStream> open(double limit) const = 0;

  // Runtimes the model should reproduce over the full grid, when known.
  virtual std::optional<Eigen::ArrayXd> reference_runtimes() const { return std::nullopt; }
};

struct ProbeResult {
  ProfilePoint point;
  double duration_seconds = 0.0;
};

/// Draws samples until the stopping rule fires. Throws std::invalid_argument for
/// off-grid or out-of-range limits; oracle failures propagate.
ProbeResult probe(const JobOracle& oracle, double limit, const StoppingRule& rule);

/// Ground truth times multiplicative log-normal noise, deterministic per (seed, limit, index).
class SyntheticOracle : public JobOracle {
 public:
  SyntheticOracle(RuntimeModel truth, double sigma_noise, std::uint64_t seed, LimitGrid grid);

  const LimitGrid& grid() const override { return grid_; }
  bool supports_parallel() const override { return true; }
  std::unique_ptr<SampleStream> open(double limit) const override;
  std::optional<Eigen::ArrayXd> reference_runtimes() const override;

  const RuntimeModel& truth() const { return truth_; }
  double sigma_noise() const { return sigma_noise_; }
  std::uint64_t seed() const { return seed_; }

 private:
  RuntimeModel truth_;
  double sigma_noise_;
  std::uint64_t seed_;
  LimitGrid grid_;
};

/// Replays recorded per-limit sample series. Each probe starts at the first recorded sample.
class TraceOracle : public JobOracle {
 public:
  TraceOracle(LimitGrid grid, std::vector<std::vector<double>> series);

  const LimitGrid& grid() const override { return grid_; }
  bool supports_parallel() const override { return true; }
  std::unique_ptr<SampleStream> open(double limit) const override;
  // Mean of every recorded sample per limit.
  std::optional<Eigen::ArrayXd> reference_runtimes() const override;

  const std::vector<double>& series(std::size_t grid_index) const { return series_.at(grid_index); }

 private:
  LimitGrid grid_;
  std::vector<std::vector<double>> series_;
};

/// Reads `cpu_limit,sample_index,runtime_seconds` CSV. The grid is inferred from the limits.
/// Throws SchemaError naming the offending line.
TraceOracle load_trace(const std::filesystem::path& path);

void write_trace(std::ostream& out, const LimitGrid& grid, const std::vector<std::vector<double>>& series);

/// Runs a shell command per probe; `{limit}` in the template is replaced by the limit.
/// Every output line is one per-sample runtime in seconds. The command is responsible
/// for actually constraining the CPU.
class CommandOracle : public JobOracle {
 public:
  CommandOracle(std::string command_template, LimitGrid grid, std::chrono::milliseconds timeout,
                bool parallel = false);

  const LimitGrid& grid() const override { return grid_; }
  bool supports_parallel() const override { return parallel_; }
  std::unique_ptr<SampleStream> open(double limit) const override;

  std::string command_for(double limit) const;

 private:
  std::string template_;
  LimitGrid grid_;
  std::chrono::milliseconds timeout_;
  bool parallel_;
};

}  // namespace rtprof
