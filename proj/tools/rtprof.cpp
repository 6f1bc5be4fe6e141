// Command-line front end: profile, fit, bench and simulate.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtprof/config.hpp"
#include "rtprof/csv.hpp"
#include "rtprof/errors.hpp"
#include "rtprof/model.hpp"
#include "rtprof/oracle.hpp"
#include "rtprof/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::string> strategy;
  std::optional<double> p;
  std::optional<int> n_initial;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> min_samples;
  std::optional<std::size_t> max_samples;
  std::optional<double> lambda;
  std::optional<double> confidence;
  std::optional<int> max_steps;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--strategy", o.strategy, "Selection strategy: nms, bs, bo, random");
  cmd->add_option("--p", o.p, "Synthetic target fraction of l_max");
  cmd->add_option("--n-initial", o.n_initial, "Initial parallel probes (2, 3 or 4)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--min-samples", o.min_samples, "Minimum samples per probe");
  cmd->add_option("--max-samples", o.max_samples, "Sample cap per probe");
  cmd->add_option("--lambda", o.lambda, "CI width as a fraction of the mean");
  cmd->add_option("--confidence", o.confidence, "Confidence level of the t interval");
  cmd->add_option("--max-steps", o.max_steps, "Total probes including the initial ones");
}

void apply(const Overrides& o, rtprof::RunConfig& rc) {
  auto& pc = rc.profiling;
  if (o.strategy) {
    try {
      pc.strategy = rtprof::parse_strategy(*o.strategy);
    } catch (const std::invalid_argument& e) {
      throw rtprof::ConfigError(std::string("--strategy: ") + e.what());
    }
  }
  if (o.p) pc.p = *o.p;
  if (o.n_initial) pc.n_initial = *o.n_initial;
  if (o.seed) pc.seed = *o.seed;
  if (o.min_samples) pc.stopping.min_samples = *o.min_samples;
  if (o.max_samples) pc.stopping.max_samples = *o.max_samples;
  if (o.lambda) pc.stopping.lambda = *o.lambda;
  if (o.confidence) pc.stopping.confidence_level = *o.confidence;
  if (o.max_steps) pc.max_steps = *o.max_steps;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rtprof::ConfigError("cannot write output file " + path.string());
  out << content;
}

json envelope(const rtprof::RunConfig& rc) {
  return json{{"schema_version", 1}, {"version", rtprof::kVersion}, {"config", rtprof::to_json(rc)}};
}

json model_document(const rtprof::RuntimeModel& model) {
  json j = model;
  j["schema_version"] = 1;
  j["version"] = rtprof::kVersion;
  return j;
}

int cmd_profile(const fs::path& config_path, const fs::path& out_dir, const Overrides& overrides,
                std::optional<double> target_runtime) {
  auto rc = rtprof::load_run_config(config_path);
  apply(overrides, rc);
  const auto oracle = rtprof::make_oracle(rc);
  rc.profiling.validate();

  const auto report = rtprof::run_session(*oracle, rc.profiling, oracle->reference_runtimes());
  json doc = envelope(rc);
  doc["report"] = report;

  const auto& model = report.final_model();
  std::cout << rtprof::describe(model) << '\n';
  std::cout << "probes: " << report.probes.size() << ", accounted profiling time: " << report.total_time << " s\n";
  if (report.models.back().smape) std::cout << "smape vs reference: " << *report.models.back().smape << '\n';
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (target_runtime) {
    if (!(*target_runtime > 0.0)) throw rtprof::ConfigError("--target-runtime must be positive");
    const auto inv = rtprof::invert(model, *target_runtime, rc.profiling.grid);
    doc["recommendation"] = {{"target_runtime", *target_runtime}, {"cpu_limit", inv.limit},
                             {"unreachable", inv.unreachable}};
    std::cout << "recommended cpu limit: " << rtprof::csv::format(inv.limit);
    if (inv.unreachable) std::cout << " (target below the runtime floor; using l_max)";
    std::cout << '\n';
  }
  write_file(out_dir / "session.json", doc.dump(2) + "\n");
  write_file(out_dir / "model.json", model_document(model).dump(2) + "\n");
  return 0;
}

int cmd_fit(const fs::path& points_path, const std::optional<fs::path>& out_dir) {
  std::ifstream in(points_path);
  if (!in) throw rtprof::SchemaError("cannot open points file " + points_path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw rtprof::SchemaError(points_path.string() + ": empty file");
  const auto header = rtprof::csv::split(line);
  if (header.size() != 2 || header[0] != "cpu_limit" || header[1] != "mean_runtime") {
    throw rtprof::SchemaError(points_path.string() + ": line 1: expected header cpu_limit,mean_runtime");
  }
  std::vector<double> limits;
  std::vector<double> runtimes;
  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (rtprof::csv::trim(line).empty()) continue;
    const auto fields = rtprof::csv::split(line);
    const std::string where = points_path.string() + ": line " + std::to_string(line_no) + ": ";
    if (fields.size() != 2) throw rtprof::SchemaError(where + "expected 2 fields");
    const auto limit = rtprof::csv::parse_double(fields[0]);
    const auto runtime = rtprof::csv::parse_double(fields[1]);
    if (!limit || !(*limit > 0.0)) throw rtprof::SchemaError(where + "cpu_limit must be a positive number");
    if (!runtime || !(*runtime > 0.0)) throw rtprof::SchemaError(where + "mean_runtime must be a positive number");
    for (std::size_t i = 0; i < limits.size(); ++i) {
      if (std::abs(limits[i] - *limit) <= 1e-9) {
        throw rtprof::SchemaError(where + "duplicate cpu_limit, first seen on line " + std::to_string(lines[i]));
      }
    }
    limits.push_back(*limit);
    runtimes.push_back(*runtime);
    lines.push_back(line_no);
  }
  if (limits.empty()) throw rtprof::SchemaError(points_path.string() + ": no data rows");

  const auto fitted = rtprof::fit(limits, runtimes);
  const std::string doc = model_document(fitted.model).dump(2) + "\n";
  std::cout << doc;
  if (out_dir) write_file(*out_dir / "model.json", doc);
  return 0;
}

int cmd_bench(const fs::path& config_path, const fs::path& out_dir, const Overrides& overrides,
              const std::vector<std::string>& strategies, std::optional<std::size_t> repetitions) {
  auto rc = rtprof::load_run_config(config_path);
  apply(overrides, rc);
  if (!strategies.empty()) {
    rc.bench_strategies.clear();
    for (const auto& s : strategies) {
      try {
        rc.bench_strategies.push_back(rtprof::parse_strategy(s));
      } catch (const std::invalid_argument& e) {
        throw rtprof::ConfigError(std::string("--strategies: ") + e.what());
      }
    }
  }
  if (repetitions) rc.repetitions = *repetitions;
  if (rc.bench_strategies.empty()) throw rtprof::ConfigError("bench needs at least one strategy");
  if (rc.repetitions < 1) throw rtprof::ConfigError("bench.repetitions must be at least 1");

  // Resolves the grid for trace oracles and surfaces config errors before any cell runs.
  rtprof::RunConfig probe_rc = rc;
  (void)rtprof::make_oracle(probe_rc);
  rc.profiling.grid = probe_rc.profiling.grid;
  rc.profiling.validate();

  const std::vector<rtprof::NamedConfig> configs{{"default", rc.profiling}};
  auto factory = [&rc](const rtprof::NamedConfig&, std::uint64_t seed) {
    rtprof::RunConfig cell = rc;
    return rtprof::make_oracle(cell, seed);
  };
  const auto report =
      rtprof::run_benchmark(factory, configs, rc.bench_strategies, rc.repetitions, rc.profiling.seed);

  json doc = envelope(rc);
  doc["report"] = report;
  write_file(out_dir / "bench.json", doc.dump(2) + "\n");
  std::ostringstream smape_csv, time_csv, wins_csv;
  rtprof::write_smape_csv(smape_csv, report);
  rtprof::write_time_csv(time_csv, report);
  rtprof::write_wins_csv(wins_csv, report);
  write_file(out_dir / "smape_by_step.csv", smape_csv.str());
  write_file(out_dir / "time_by_step.csv", time_csv.str());
  write_file(out_dir / "wins.csv", wins_csv.str());

  std::cout << "cells: " << rc.bench_strategies.size() * rc.repetitions << ", failed: " << report.failures.size()
            << '\n';
  for (const auto& w : report.wins) {
    std::cout << rtprof::to_string(w.strategy) << " step " << w.step << ": wins " << w.wins_0 << " (" << w.wins_10
              << " within 10%)\n";
  }
  return report.rows.empty() ? kExitRuntime : 0;
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir, std::optional<std::size_t> samples,
                 std::optional<std::uint64_t> seed) {
  auto rc = rtprof::load_run_config(config_path);
  if (seed) rc.profiling.seed = *seed;
  if (samples) rc.samples_per_limit = *samples;
  if (rc.oracle.type != rtprof::OracleType::Synthetic) {
    throw rtprof::ConfigError("simulate needs a synthetic oracle (oracle.type = synthetic)");
  }
  if (rc.samples_per_limit < 1) throw rtprof::ConfigError("simulate.samples_per_limit must be at least 1");
  const auto oracle = rtprof::make_oracle(rc);
  const auto& grid = oracle->grid();
  std::vector<std::vector<double>> series(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto stream = oracle->open(grid.limit(i));
    series[i].reserve(rc.samples_per_limit);
    for (std::size_t k = 0; k < rc.samples_per_limit; ++k) series[i].push_back(stream->next());
  }
  std::ostringstream out;
  rtprof::write_trace(out, grid, series);
  write_file(out_dir / "trace.csv", out.str());
  std::cout << "wrote " << grid.size() * rc.samples_per_limit << " samples to " << (out_dir / "trace.csv").string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-probe runtime profiling of black-box jobs under CPU limits"};
  app.set_version_flag("--version", std::string(rtprof::kVersion));
  app.require_subcommand(1);

  fs::path config_path;
  fs::path out_dir = ".";
  Overrides overrides;
  std::optional<double> target_runtime;

  auto* profile = app.add_subcommand("profile", "Run one profiling session");
  profile->add_option("--config,-c", config_path, "Session config (JSON)")->required();
  profile->add_option("--out,-o", out_dir, "Output directory");
  profile->add_option("--target-runtime", target_runtime, "Per-sample runtime target (s) to recommend a limit for");
  add_overrides(profile, overrides);

  fs::path points_path;
  std::optional<fs::path> fit_out;
  auto* fit = app.add_subcommand("fit", "Fit a runtime model to cpu_limit,mean_runtime rows");
  fit->add_option("points", points_path, "Points CSV")->required();
  fit->add_option("--out,-o", fit_out, "Also write model.json into this directory");

  std::vector<std::string> strategies;
  std::optional<std::size_t> repetitions;
  auto* bench = app.add_subcommand("bench", "Compare selection strategies over repeated sessions");
  bench->add_option("--config,-c", config_path, "Benchmark config (JSON)")->required();
  bench->add_option("--out,-o", out_dir, "Output directory");
  bench->add_option("--strategies", strategies, "Strategies to compare")->delimiter(',');
  bench->add_option("--repetitions", repetitions, "Repetitions per strategy");
  add_overrides(bench, overrides);

  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Write a trace CSV sampled from a synthetic job");
  simulate->add_option("--config,-c", config_path, "Config with a synthetic oracle (JSON)")->required();
  simulate->add_option("--out,-o", out_dir, "Output directory");
  simulate->add_option("--samples", samples, "Samples per limit");
  simulate->add_option("--seed", sim_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*profile) return cmd_profile(config_path, out_dir, overrides, target_runtime);
    if (*fit) return cmd_fit(points_path, fit_out);
    if (*bench) return cmd_bench(config_path, out_dir, overrides, strategies, repetitions);
    if (*simulate) return cmd_simulate(config_path, out_dir, samples, sim_seed);
  } catch (const rtprof::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
