#include "rtprof/session.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "rtprof/csv.hpp"
#include "rtprof/errors.hpp"
#include "rtprof/metrics.hpp"
#include "rtprof/seeding.hpp"

namespace rtprof {

namespace {

constexpr int kSchemaVersion = 1;

ProbeResult probe_with_context(const JobOracle& oracle, double limit, const StoppingRule& rule, std::size_t step) {
  try {
    return probe(oracle, limit, rule);
  } catch (const TraceExhausted& e) {
    throw TraceExhausted("step " + std::to_string(step) + " (limit " + csv::format(limit) + "): " + e.what());
  } catch (const OracleError& e) {
    throw OracleError("step " + std::to_string(step) + " (limit " + csv::format(limit) + "): " + e.what());
  }
}

std::vector<ProbeResult> probe_initial(const JobOracle& oracle, const std::vector<double>& limits,
                                       const ProfilingConfig& config) {
  std::vector<ProbeResult> results;
  results.reserve(limits.size());
  if (config.concurrent_initial && oracle.supports_parallel()) {
    std::vector<std::future<ProbeResult>> futures;
    for (std::size_t i = 0; i < limits.size(); ++i) {
      futures.push_back(std::async(std::launch::async, probe_with_context, std::cref(oracle), limits[i],
                                   std::cref(config.stopping), i + 1));
    }
    for (auto& f : futures) results.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < limits.size(); ++i) {
      results.push_back(probe_with_context(oracle, limits[i], config.stopping, i + 1));
    }
  }
  return results;
}

std::vector<ProfilePoint> points_of(const SessionReport& report) {
  std::vector<ProfilePoint> points;
  for (const auto& p : report.probes) points.push_back(p.point);
  return points;
}

}  // namespace

void ProfilingConfig::validate() const {
  if (n_initial < 2 || n_initial > 4) {
    throw ConfigError("n_initial must be 2, 3 or 4, got " + std::to_string(n_initial));
  }
  if (max_steps < n_initial) {
    throw ConfigError("max_steps (" + std::to_string(max_steps) + ") must be at least n_initial (" +
                      std::to_string(n_initial) + ")");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("p must be in (0, 1)");
  }
  try {
    stopping.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

SessionReport run_session(const JobOracle& oracle, const ProfilingConfig& config,
                          const std::optional<Eigen::ArrayXd>& reference) {
  config.validate();
  const LimitGrid& grid = config.grid;
  if (!(oracle.grid() == grid)) {
    throw ConfigError("oracle grid does not match the configured grid");
  }
  if (reference && static_cast<std::size_t>(reference->size()) != grid.size()) {
    throw std::invalid_argument("reference runtimes must cover every grid limit");
  }

  SessionReport report;
  const InitialLimits initial = initial_limits(config.p, config.n_initial, grid);
  report.warnings = initial.warnings;
  report.synthetic_limit = initial.synthetic_limit;

  const auto results = probe_initial(oracle, initial.limits, config);
  double phase_time = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    report.probes.push_back(ProbeRecord{i + 1, results[i].point, results[i].duration_seconds, true});
    phase_time = std::max(phase_time, results[i].duration_seconds);
  }

  const SyntheticTarget target = synthetic_target(results.front().point, grid, config.stopping);
  report.target_runtime = target.runtime;
  if (target.warning) report.warnings.push_back(*target.warning);

  StrategyState state = make_strategy_state(config.strategy, target.runtime, grid, config.seed);
  for (const auto& r : results) record(state, r.point, grid);

  double elapsed = phase_time;
  auto refit = [&](const std::optional<RuntimeModel>& warm) {
    const auto points = points_of(report);
    FitResult fitted = fit(points, warm);
    report.models.push_back(StepModel{points.size(), fitted.model, fitted.residual_norm, elapsed, std::nullopt});
    if (auto* nms = std::get_if<NmsState>(&state.detail)) {
      nms->model = fitted.model;
      nms->fitted_on = points.size();
    }
  };
  refit(std::nullopt);

  while (report.probes.size() < static_cast<std::size_t>(config.max_steps)) {
    const auto next = next_limit(state, grid);
    if (!next) {
      report.exhausted = true;
      break;
    }
    const std::size_t step = report.probes.size() + 1;
    const ProbeResult result = probe_with_context(oracle, *next, config.stopping, step);
    elapsed += result.duration_seconds;
    report.probes.push_back(ProbeRecord{step, result.point, result.duration_seconds, false});
    record(state, result.point, grid);
    const bool warm = config.strategy == StrategyKind::Nms;
    refit(warm ? std::optional<RuntimeModel>(report.models.back().model) : std::nullopt);
  }
  report.total_time = elapsed;

  if (reference) {
    const Eigen::ArrayXd limits = grid.limits();
    for (auto& m : report.models) {
      m.smape = smape(*reference, eval(m.model, limits));
    }
  }
  return report;
}

BenchmarkReport run_benchmark(const OracleFactory& make_oracle, const std::vector<NamedConfig>& configs,
                              const std::vector<StrategyKind>& strategies, std::size_t repetitions,
                              std::uint64_t master_seed) {
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (strategies.empty()) throw ConfigError("at least one strategy is required");
  if (configs.empty()) throw ConfigError("at least one profiling config is required");

  BenchmarkReport report;
  report.strategies = strategies;
  report.repetitions = repetitions;
  report.master_seed = master_seed;

  // (config, repetition, step) -> per-strategy SMAPE, NaN when missing.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<double>> cells;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& named = configs[c];
    named.config.validate();
    report.configs.push_back(named.label);
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      std::unique_ptr<JobOracle> oracle;
      std::string oracle_error;
      try {
        oracle = make_oracle(named, derive_seed(master_seed, {c, rep, 0}));
      } catch (const std::exception& e) {
        oracle_error = e.what();
      }
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        if (!oracle) {
          report.failures.push_back(BenchmarkFailure{named.label, strategies[s], rep, oracle_error});
          continue;
        }
        ProfilingConfig cfg = named.config;
        cfg.strategy = strategies[s];
        cfg.seed = derive_seed(master_seed, {c, rep, 1, static_cast<std::uint64_t>(strategies[s])});
        cfg.concurrent_initial = false;
        try {
          const auto reference = oracle->reference_runtimes();
          if (!reference) throw ConfigError("benchmark needs an oracle with reference runtimes");
          const SessionReport session = run_session(*oracle, cfg, reference);
          // Sessions that ran out of candidates keep their last model for the remaining steps.
          std::size_t k = 0;
          for (auto step = static_cast<std::size_t>(cfg.n_initial); step <= static_cast<std::size_t>(cfg.max_steps);
               ++step) {
            while (k + 1 < session.models.size() && session.models[k + 1].step <= step) ++k;
            const auto& m = session.models[k];
            report.rows.push_back(BenchmarkRow{named.label, strategies[s], step, rep, *m.smape, m.accounted_time});
            auto& cell = cells[{c, rep, step}];
            cell.resize(strategies.size(), nan);
            cell[s] = *m.smape;
          }
        } catch (const std::exception& e) {
          report.failures.push_back(BenchmarkFailure{named.label, strategies[s], rep, e.what()});
        }
      }
    }
  }

  std::map<std::size_t, std::vector<const std::vector<double>*>> by_step;
  for (const auto& [key, values] : cells) by_step[std::get<2>(key)].push_back(&values);
  std::map<std::pair<std::size_t, std::size_t>, WinCount> wins;  // (strategy index, step)
  for (const auto& [step, columns] : by_step) {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(strategies.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t col = 0; col < columns.size(); ++col) {
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(col)) = (*columns[col])[s];
      }
    }
    const Eigen::VectorXi exact = count_wins(table, 0.0);
    const Eigen::VectorXi near = count_wins(table, kNearWinTolerance);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      wins[{s, step}] = WinCount{strategies[s], step, exact[static_cast<Eigen::Index>(s)],
                                 near[static_cast<Eigen::Index>(s)]};
    }
  }
  for (const auto& [_, w] : wins) report.wins.push_back(w);
  return report;
}

// --- serialization ---------------------------------------------------------

void to_json(nlohmann::json& j, const ProfilingConfig& c) {
  j = nlohmann::json{{"grid", {{"l_min", c.grid.l_min()}, {"l_max", c.grid.l_max()}, {"delta", c.grid.delta()}}},
                     {"n_initial", c.n_initial},
                     {"p", c.p},
                     {"strategy", std::string(to_string(c.strategy))},
                     {"stopping", c.stopping},
                     {"max_steps", c.max_steps},
                     {"seed", c.seed}};
}

void to_json(nlohmann::json& j, const SessionReport& r) {
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : r.probes) {
    probes.push_back({{"step", p.step}, {"point", p.point}, {"duration_seconds", p.duration_seconds},
                      {"initial", p.initial}});
  }
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : r.models) {
    nlohmann::json entry{{"step", m.step},
                         {"model", m.model},
                         {"residual_norm", m.residual_norm},
                         {"accounted_time", m.accounted_time}};
    entry["smape"] = m.smape ? nlohmann::json(*m.smape) : nlohmann::json(nullptr);
    models.push_back(std::move(entry));
  }
  j = nlohmann::json{{"schema_version", kSchemaVersion},
                     {"synthetic_limit", r.synthetic_limit},
                     {"target_runtime", r.target_runtime},
                     {"total_time", r.total_time},
                     {"exhausted", r.exhausted},
                     {"warnings", r.warnings},
                     {"probes", std::move(probes)},
                     {"models", std::move(models)}};
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void to_json(nlohmann::json& j, const BenchmarkReport& r) {
  std::vector<std::string> strategies;
  for (auto s : r.strategies) strategies.emplace_back(to_string(s));

  std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<double>> groups;
  for (const auto& row : r.rows) groups[{row.config, std::string(to_string(row.strategy)), row.step}].push_back(row.smape);
  nlohmann::json distributions = nlohmann::json::array();
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    distributions.push_back({{"config", std::get<0>(key)},
                             {"strategy", std::get<1>(key)},
                             {"step", std::get<2>(key)},
                             {"count", values.size()},
                             {"mean", sum / static_cast<double>(values.size())},
                             {"median", quantile_sorted(values, 0.5)},
                             {"p05", quantile_sorted(values, 0.05)},
                             {"p95", quantile_sorted(values, 0.95)},
                             {"min", values.front()},
                             {"max", values.back()}});
  }
  nlohmann::json wins = nlohmann::json::array();
  for (const auto& w : r.wins) {
    wins.push_back({{"strategy", std::string(to_string(w.strategy))}, {"step", w.step}, {"wins_0", w.wins_0},
                    {"wins_10", w.wins_10}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"config", f.config}, {"strategy", std::string(to_string(f.strategy))},
                        {"repetition", f.repetition}, {"error", f.error}});
  }
  j = nlohmann::json{{"schema_version", kSchemaVersion},
                     {"configs", r.configs},
                     {"strategies", strategies},
                     {"repetitions", r.repetitions},
                     {"master_seed", r.master_seed},
                     {"smape_distributions", std::move(distributions)},
                     {"wins", std::move(wins)},
                     {"failures", std::move(failures)}};
}

void write_smape_csv(std::ostream& out, const BenchmarkReport& r) {
  out << "config,strategy,step,repetition,smape\r\n";
  for (const auto& row : r.rows) {
    out << csv::quote(row.config) << ',' << to_string(row.strategy) << ',' << row.step << ',' << row.repetition << ','
        << csv::format(row.smape) << "\r\n";
  }
}

void write_time_csv(std::ostream& out, const BenchmarkReport& r) {
  out << "config,strategy,step,repetition,time_seconds\r\n";
  for (const auto& row : r.rows) {
    out << csv::quote(row.config) << ',' << to_string(row.strategy) << ',' << row.step << ',' << row.repetition << ','
        << csv::format(row.time_seconds) << "\r\n";
  }
}

void write_wins_csv(std::ostream& out, const BenchmarkReport& r) {
  out << "strategy,step,wins_0,wins_10\r\n";
  for (const auto& w : r.wins) {
    out << to_string(w.strategy) << ',' << w.step << ',' << w.wins_0 << ',' << w.wins_10 << "\r\n";
  }
}

}  // namespace rtprof
