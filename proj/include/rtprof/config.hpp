#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtprof/oracle.hpp"
#include "rtprof/session.hpp"

namespace rtprof {

inline constexpr const char* kVersion = "rtprof 0.1.0";

enum class OracleType { Synthetic, Trace, Command };

struct OracleSpec {
  OracleType type = OracleType::Synthetic;
  // synthetic
  RuntimeModel truth{5, 1.0, 1.0, 0.0, 1.0};
  double sigma_noise = 0.0;
  std::optional<std::uint64_t> seed;  // defaults to the session seed
  // trace
  std::filesystem::path trace_path;
  // command
  std::string command;
  double timeout_seconds = 600.0;
  bool parallel = false;
};

/// Everything a CLI run needs, parsed from the JSON config file.
struct RunConfig {
  ProfilingConfig profiling;
  bool grid_given = false;
  OracleSpec oracle;
  std::vector<StrategyKind> bench_strategies{StrategyKind::Nms, StrategyKind::BinarySearch, StrategyKind::BayesOpt,
                                             StrategyKind::Random};
  std::size_t repetitions = 50;
  std::size_t samples_per_limit = 1000;
};

/// Throws ConfigError naming the offending field.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

/// Builds the oracle. Trace oracles fix the grid: `config.profiling.grid` is replaced by the
/// trace grid, or checked against it when the config file gave one.
std::unique_ptr<JobOracle> make_oracle(RunConfig& config, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace rtprof
