#include "rtprof/oracle.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rtprof/csv.hpp"
#include "rtprof/errors.hpp"
#include "rtprof/seeding.hpp"

namespace rtprof {

ProbeResult probe(const JobOracle& oracle, double limit, const StoppingRule& rule) {
  const auto& grid = oracle.grid();
  const auto index = grid.index_of(limit);
  if (!index) {
    throw std::invalid_argument("cpu limit " + csv::format(limit) + " is not on the grid [" +
                                csv::format(grid.l_min()) + ", " + csv::format(grid.l_max()) + "] step " +
                                csv::format(grid.delta()));
  }
  StoppingMonitor monitor(rule);
  auto stream = oracle.open(grid.limit(*index));
  double sum = 0.0;
  while (true) {
    const double sample = stream->next();
    if (!(sample > 0.0) || !std::isfinite(sample)) {
      throw OracleError("non-positive per-sample runtime " + csv::format(sample) + " at limit " +
                        csv::format(grid.limit(*index)));
    }
    sum += sample;
    if (monitor.push(sample)) break;
  }
  const auto& stats = monitor.stats();
  ProfilePoint point{grid.limit(*index), stats.mean(), stats.count(), stats.variance(), monitor.current_ci_width()};
  return ProbeResult{point, stream->accounted_duration(sum)};
}

// --- synthetic -------------------------------------------------------------

namespace {

class SyntheticStream : public SampleStream {
 public:
  SyntheticStream(double base, double sigma, std::uint64_t seed) : base_(base), sigma_(sigma), rng_(seed) {}

  double next() override {
    if (sigma_ == 0.0) return base_;
    return base_ * std::exp(sigma_ * normal_(rng_));
  }

 private:
  double base_;
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

SyntheticOracle::SyntheticOracle(RuntimeModel truth, double sigma_noise, std::uint64_t seed, LimitGrid grid)
    : truth_(truth), sigma_noise_(sigma_noise), seed_(seed), grid_(grid) {
  truth_.validate();
  if (!(sigma_noise >= 0.0) || !std::isfinite(sigma_noise)) {
    throw std::invalid_argument("sigma_noise must be non-negative");
  }
}

std::unique_ptr<SampleStream> SyntheticOracle::open(double limit) const {
  const auto index = grid_.index_of(limit);
  if (!index) throw std::invalid_argument("cpu limit " + csv::format(limit) + " is not on the grid");
  return std::make_unique<SyntheticStream>(eval(truth_, grid_.limit(*index)), sigma_noise_,
                                           derive_seed(seed_, {*index}));
}

std::optional<Eigen::ArrayXd> SyntheticOracle::reference_runtimes() const { return eval(truth_, grid_.limits()); }

// --- trace -----------------------------------------------------------------

namespace {

class TraceStream : public SampleStream {
 public:
  TraceStream(const std::vector<double>& series, double limit) : series_(series), limit_(limit) {}

  double next() override {
    if (cursor_ >= series_.size()) {
      throw TraceExhausted("trace exhausted at limit " + csv::format(limit_) + " after " +
                           std::to_string(series_.size()) + " samples");
    }
    return series_[cursor_++];
  }

 private:
  const std::vector<double>& series_;
  double limit_;
  std::size_t cursor_ = 0;
};

}  // namespace

TraceOracle::TraceOracle(LimitGrid grid, std::vector<std::vector<double>> series)
    : grid_(grid), series_(std::move(series)) {
  if (series_.size() != grid_.size()) {
    throw std::invalid_argument("trace needs one series per grid limit");
  }
}

std::unique_ptr<SampleStream> TraceOracle::open(double limit) const {
  const auto index = grid_.index_of(limit);
  if (!index) throw std::invalid_argument("cpu limit " + csv::format(limit) + " is not on the grid");
  return std::make_unique<TraceStream>(series_[*index], grid_.limit(*index));
}

std::optional<Eigen::ArrayXd> TraceOracle::reference_runtimes() const {
  Eigen::ArrayXd means(static_cast<Eigen::Index>(series_.size()));
  for (std::size_t i = 0; i < series_.size(); ++i) {
    const auto& s = series_[i];
    if (s.empty()) return std::nullopt;
    RunningStats acc;
    for (double x : s) acc.push(x);
    means[static_cast<Eigen::Index>(i)] = acc.mean();
  }
  return means;
}

TraceOracle load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw SchemaError("cannot open trace file " + path.string());
  }
  const std::string where = path.string();
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw SchemaError(where + ": empty trace file");
  }
  ++line_no;
  std::string_view header = line;
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto columns = csv::split(header);
  if (columns.size() != 3 || columns[0] != "cpu_limit" || columns[1] != "sample_index" ||
      columns[2] != "runtime_seconds") {
    throw SchemaError(where + ": line 1: expected header cpu_limit,sample_index,runtime_seconds");
  }

  struct Row {
    double limit;
    long index;
    double runtime;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    auto fail = [&](const std::string& why) {
      return SchemaError(where + ": line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 3) throw fail("expected 3 fields, got " + std::to_string(fields.size()));
    const auto limit = csv::parse_double(fields[0]);
    const auto index = csv::parse_double(fields[1]);
    const auto runtime = csv::parse_double(fields[2]);
    if (!limit || !(*limit > 0.0)) throw fail("cpu_limit must be a positive number");
    if (!index || *index < 0.0 || std::floor(*index) != *index) throw fail("sample_index must be a non-negative integer");
    if (!runtime) throw fail("runtime_seconds is not a number");
    if (!(*runtime > 0.0)) throw fail("runtime_seconds must be positive, got " + std::string(fields[2]));
    rows.push_back(Row{*limit, static_cast<long>(*index), *runtime, line_no});
  }
  if (rows.empty()) {
    throw SchemaError(where + ": trace has no data rows");
  }

  std::vector<double> limits;
  for (const auto& r : rows) limits.push_back(r.limit);
  std::sort(limits.begin(), limits.end());
  limits.erase(std::unique(limits.begin(), limits.end(), [](double a, double b) { return b - a <= 1e-9; }),
               limits.end());
  if (limits.size() < 2) {
    throw SchemaError(where + ": trace needs at least two distinct cpu limits to define a grid");
  }
  double delta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < limits.size(); ++i) delta = std::min(delta, limits[i] - limits[i - 1]);
  for (std::size_t i = 1; i < limits.size(); ++i) {
    if (std::abs((limits[i] - limits[i - 1]) - delta) > 1e-9) {
      throw SchemaError(where + ": non-uniform grid: gap " + csv::format(limits[i] - limits[i - 1]) + " between " +
                        csv::format(limits[i - 1]) + " and " + csv::format(limits[i]) + " differs from " +
                        csv::format(delta));
    }
  }
  delta = canonical_limit(delta);
  std::optional<LimitGrid> grid;
  try {
    grid.emplace(canonical_limit(limits.front()), canonical_limit(limits.back()), delta);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }

  std::vector<std::map<long, std::pair<double, std::size_t>>> by_limit(grid->size());
  for (const auto& r : rows) {
    const auto idx = grid->index_of(r.limit);
    if (!idx) throw SchemaError(where + ": line " + std::to_string(r.line) + ": cpu_limit is off the inferred grid");
    auto [it, inserted] = by_limit[*idx].emplace(r.index, std::make_pair(r.runtime, r.line));
    if (!inserted) {
      throw SchemaError(where + ": line " + std::to_string(r.line) + ": duplicate (cpu_limit, sample_index) = (" +
                        csv::format(r.limit) + ", " + std::to_string(r.index) + "), first seen on line " +
                        std::to_string(it->second.second));
    }
  }
  std::vector<std::vector<double>> series(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    for (const auto& [_, value] : by_limit[i]) series[i].push_back(value.first);
  }
  return TraceOracle(*grid, std::move(series));
}

void write_trace(std::ostream& out, const LimitGrid& grid, const std::vector<std::vector<double>>& series) {
  out << "cpu_limit,sample_index,runtime_seconds\r\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string limit = csv::format(grid.limit(i));
    for (std::size_t k = 0; k < series[i].size(); ++k) {
      out << limit << ',' << k << ',' << csv::format(series[i][k]) << "\r\n";
    }
  }
}

// --- command ---------------------------------------------------------------

namespace {

class CommandStream : public SampleStream {
 public:
  CommandStream(const std::string& command, std::chrono::milliseconds timeout)
      : command_(command), deadline_(std::chrono::steady_clock::now() + timeout),
        started_(std::chrono::steady_clock::now()) {
    int fds[2];
    if (pipe(fds) != 0) {
      throw OracleError(std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) {
      close(fds[0]);
      close(fds[1]);
      throw OracleError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      setpgid(0, 0);
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid_, pid_);
    close(fds[1]);
    fd_ = fds[0];
  }

  ~CommandStream() override {
    if (fd_ >= 0) close(fd_);
    if (pid_ > 0) {
      kill(-pid_, SIGKILL);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  CommandStream(const CommandStream&) = delete;
  CommandStream& operator=(const CommandStream&) = delete;

  double next() override {
    while (true) {
      std::string line;
      if (!read_line(line)) {
        throw OracleError("command ended before the stopping rule fired: " + command_);
      }
      if (csv::trim(line).empty()) continue;
      const auto value = csv::parse_double(line);
      if (!value) {
        throw OracleError("unparsable runtime '" + std::string(csv::trim(line)) + "' from command: " + command_);
      }
      return *value;
    }
  }

  double accounted_duration(double) override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  }

 private:
  bool read_line(std::string& line) {
    while (true) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        return true;
      }
      if (eof_) {
        if (buffer_.empty()) return false;
        line = std::move(buffer_);
        buffer_.clear();
        return true;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline_ - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        throw OracleError("command timed out: " + command_);
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw OracleError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t got = read(fd_, chunk, sizeof(chunk));
      if (got < 0) {
        if (errno == EINTR) continue;
        throw OracleError(std::string("read failed: ") + std::strerror(errno));
      }
      if (got == 0) {
        eof_ = true;
      } else {
        buffer_.append(chunk, static_cast<std::size_t>(got));
      }
    }
  }

  std::string command_;
  std::chrono::steady_clock::time_point deadline_;
  std::chrono::steady_clock::time_point started_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace

CommandOracle::CommandOracle(std::string command_template, LimitGrid grid, std::chrono::milliseconds timeout,
                             bool parallel)
    : template_(std::move(command_template)), grid_(grid), timeout_(timeout), parallel_(parallel) {
  if (template_.empty()) throw std::invalid_argument("command template must not be empty");
  if (timeout_.count() <= 0) throw std::invalid_argument("command timeout must be positive");
}

std::string CommandOracle::command_for(double limit) const {
  std::string command = template_;
  const std::string placeholder = "{limit}";
  const std::string value = csv::format(limit);
  for (auto pos = command.find(placeholder); pos != std::string::npos; pos = command.find(placeholder, pos)) {
    command.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return command;
}

std::unique_ptr<SampleStream> CommandOracle::open(double limit) const {
  const auto index = grid_.index_of(limit);
  if (!index) throw std::invalid_argument("cpu limit " + csv::format(limit) + " is not on the grid");
  return std::make_unique<CommandStream>(command_for(grid_.limit(*index)), timeout_);
}

}  // namespace rtprof
