#include "rtprof/config.hpp"

#include <fstream>

#include "rtprof/errors.hpp"

namespace rtprof {

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* name, const std::string& path, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + path + name + "' has the wrong type");
  }
}

std::string_view to_string(OracleType t) {
  switch (t) {
    case OracleType::Synthetic: return "synthetic";
    case OracleType::Trace: return "trace";
    case OracleType::Command: return "command";
  }
  return "unknown";
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig rc;
  auto& pc = rc.profiling;

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    try {
      pc.grid = LimitGrid(field(g, "l_min", "grid.", 0.1), field(g, "l_max", "grid.", 4.0), field(g, "delta", "grid.", 0.1));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config field 'grid': ") + e.what());
    }
    rc.grid_given = true;
  }
  pc.n_initial = field(j, "n_initial", "", pc.n_initial);
  pc.p = field(j, "p", "", pc.p);
  pc.max_steps = field(j, "max_steps", "", pc.max_steps);
  pc.seed = field<std::uint64_t>(j, "seed", "", pc.seed);
  if (j.contains("strategy")) {
    try {
      pc.strategy = parse_strategy(field<std::string>(j, "strategy", "", "nms"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config field 'strategy': ") + e.what());
    }
  }
  if (j.contains("stopping")) {
    const auto& s = j.at("stopping");
    pc.stopping.confidence_level = field(s, "confidence_level", "stopping.", pc.stopping.confidence_level);
    pc.stopping.lambda = field(s, "lambda", "stopping.", pc.stopping.lambda);
    pc.stopping.min_samples = field(s, "min_samples", "stopping.", pc.stopping.min_samples);
    pc.stopping.max_samples = field(s, "max_samples", "stopping.", pc.stopping.max_samples);
  }

  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    auto& spec = rc.oracle;
    const auto type = field<std::string>(o, "type", "oracle.", "synthetic");
    if (type == "synthetic") {
      spec.type = OracleType::Synthetic;
      if (o.contains("truth")) {
        try {
          spec.truth = o.at("truth").get<RuntimeModel>();
        } catch (const std::exception& e) {
          throw ConfigError(std::string("config field 'oracle.truth': ") + e.what());
        }
      }
      spec.sigma_noise = field(o, "sigma_noise", "oracle.", spec.sigma_noise);
      if (o.contains("seed")) spec.seed = field<std::uint64_t>(o, "seed", "oracle.", 0);
    } else if (type == "trace") {
      spec.type = OracleType::Trace;
      if (!o.contains("path")) throw ConfigError("config field 'oracle.path' is required for trace oracles");
      spec.trace_path = field<std::string>(o, "path", "oracle.", "");
    } else if (type == "command") {
      spec.type = OracleType::Command;
      spec.command = field<std::string>(o, "command", "oracle.", "");
      if (spec.command.empty()) throw ConfigError("config field 'oracle.command' is required for command oracles");
      spec.timeout_seconds = field(o, "timeout_seconds", "oracle.", spec.timeout_seconds);
      spec.parallel = field(o, "parallel", "oracle.", spec.parallel);
    } else {
      throw ConfigError("config field 'oracle.type' must be synthetic, trace or command, got '" + type + "'");
    }
  }

  if (j.contains("bench")) {
    const auto& b = j.at("bench");
    if (b.contains("strategies")) {
      rc.bench_strategies.clear();
      try {
        for (const auto& s : b.at("strategies")) rc.bench_strategies.push_back(parse_strategy(s.get<std::string>()));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config field 'bench.strategies': ") + e.what());
      }
    }
    rc.repetitions = field(b, "repetitions", "bench.", rc.repetitions);
  }
  if (j.contains("simulate")) {
    rc.samples_per_limit = field(j.at("simulate"), "samples_per_limit", "simulate.", rc.samples_per_limit);
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json to_json(const RunConfig& rc) {
  nlohmann::json j = rc.profiling;
  nlohmann::json oracle{{"type", std::string(to_string(rc.oracle.type))}};
  switch (rc.oracle.type) {
    case OracleType::Synthetic:
      oracle["truth"] = rc.oracle.truth;
      oracle["sigma_noise"] = rc.oracle.sigma_noise;
      oracle["seed"] = rc.oracle.seed.value_or(rc.profiling.seed);
      break;
    case OracleType::Trace: oracle["path"] = rc.oracle.trace_path.string(); break;
    case OracleType::Command:
      oracle["command"] = rc.oracle.command;
      oracle["timeout_seconds"] = rc.oracle.timeout_seconds;
      oracle["parallel"] = rc.oracle.parallel;
      break;
  }
  j["oracle"] = std::move(oracle);
  nlohmann::json strategies = nlohmann::json::array();
  for (auto s : rc.bench_strategies) strategies.push_back(std::string(rtprof::to_string(s)));
  j["bench"] = {{"strategies", strategies}, {"repetitions", rc.repetitions}};
  j["simulate"] = {{"samples_per_limit", rc.samples_per_limit}};
  return j;
}

std::unique_ptr<JobOracle> make_oracle(RunConfig& rc, std::optional<std::uint64_t> seed_override) {
  auto& spec = rc.oracle;
  switch (spec.type) {
    case OracleType::Synthetic: {
      const std::uint64_t seed = seed_override.value_or(spec.seed.value_or(rc.profiling.seed));
      try {
        return std::make_unique<SyntheticOracle>(spec.truth, spec.sigma_noise, seed, rc.profiling.grid);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'oracle': ") + e.what());
      }
    }
    case OracleType::Trace: {
      auto trace = std::make_unique<TraceOracle>(load_trace(spec.trace_path));
      if (rc.grid_given && !(trace->grid() == rc.profiling.grid)) {
        throw ConfigError("config field 'grid' does not match the grid of trace " + spec.trace_path.string());
      }
      rc.profiling.grid = trace->grid();
      return trace;
    }
    case OracleType::Command: {
      if (!(spec.timeout_seconds > 0.0)) throw ConfigError("config field 'oracle.timeout_seconds' must be positive");
      const auto timeout = std::chrono::milliseconds(static_cast<long long>(spec.timeout_seconds * 1000.0));
      return std::make_unique<CommandOracle>(spec.command, rc.profiling.grid, timeout, spec.parallel);
    }
  }
  throw ConfigError("unknown oracle type");
}

}  // namespace rtprof
