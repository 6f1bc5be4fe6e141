#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rtprof/errors.hpp"
#include "rtprof/oracle.hpp"

using namespace rtprof;
namespace fs = std::filesystem;

namespace {

const LimitGrid kGrid(0.1, 4.0, 0.1);
const RuntimeModel kTruth{5, 0.02, 1.3, 0.005, 1.0};

fs::path temp_file(const std::string& name, const std::string& contents) {
  const fs::path path = fs::temp_directory_path() / ("rtprof_test_" + name);
  std::ofstream(path, std::ios::binary) << contents;
  return path;
}

}  // namespace

TEST_CASE("noiseless synthetic probes stop at the sample gate") {
  const SyntheticOracle oracle(kTruth, 0.0, 1, kGrid);
  for (double limit : {0.1, 0.7, 4.0}) {
    const ProbeResult r = probe(oracle, limit, StoppingRule{});
    CHECK(r.point.n_samples == 30);
    CHECK(r.point.mean_runtime == doctest::Approx(eval(kTruth, limit)).epsilon(1e-14));
    CHECK(r.point.sample_variance == doctest::Approx(0.0));
    CHECK(r.duration_seconds == doctest::Approx(30 * eval(kTruth, limit)));
  }
  CHECK_THROWS_AS(probe(oracle, 0.25, StoppingRule{}), std::invalid_argument);
  CHECK_THROWS_AS(probe(oracle, 4.1, StoppingRule{}), std::invalid_argument);
}

TEST_CASE("synthetic probes are deterministic per seed and limit") {
  const SyntheticOracle a(kTruth, 0.1, 99, kGrid), b(kTruth, 0.1, 99, kGrid), c(kTruth, 0.1, 100, kGrid);
  const StoppingRule rule;
  const ProbeResult first = probe(a, 0.5, rule);
  CHECK(probe(a, 0.5, rule).point.mean_runtime == first.point.mean_runtime);
  CHECK(probe(b, 0.5, rule).point.mean_runtime == first.point.mean_runtime);
  CHECK(probe(c, 0.5, rule).point.mean_runtime != first.point.mean_runtime);
}

TEST_CASE("synthetic noise is multiplicative log-normal") {
  const double sigma = 0.2;
  const SyntheticOracle oracle(kTruth, sigma, 5, kGrid);
  auto stream = oracle.open(1.0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += stream->next();
  const double expected = eval(kTruth, 1.0) * std::exp(0.5 * sigma * sigma);
  CHECK(std::abs(sum / n - expected) / expected < 0.01);
}

TEST_CASE("probe duration is the sum of its samples") {
  const SyntheticOracle oracle(kTruth, 0.3, 8, kGrid);
  const ProbeResult r = probe(oracle, 0.3, StoppingRule{0.95, 0.05, 30, 10000});
  CHECK(r.duration_seconds == doctest::Approx(r.point.mean_runtime * static_cast<double>(r.point.n_samples)));
}

TEST_CASE("trace oracle replays the first samples") {
  std::vector<std::vector<double>> series(kGrid.size());
  for (std::size_t i = 0; i < series.size(); ++i)
    for (int k = 0; k < 10000; ++k) series[i].push_back(1.0 + (k % 7) * 0.1 + static_cast<double>(i));
  const TraceOracle oracle(kGrid, series);
  const ProbeResult r = probe(oracle, 0.5, StoppingRule{0.95, 1e-9, 30, 1000});
  CHECK(r.point.n_samples == 1000);
  const double expected = std::accumulate(series[4].begin(), series[4].begin() + 1000, 0.0) / 1000.0;
  CHECK(r.point.mean_runtime == doctest::Approx(expected).epsilon(1e-14));

  const TraceOracle short_trace(LimitGrid(0.1, 0.2, 0.1), {{1.0, 2.0}, {1.0, 3.0}});
  CHECK_THROWS_AS(probe(short_trace, 0.1, StoppingRule{}), TraceExhausted);
}

TEST_CASE("trace CSV round trip and grid inference") {
  std::vector<std::vector<double>> series(kGrid.size(), std::vector<double>{0.5, 0.25});
  std::ostringstream out;
  write_trace(out, kGrid, series);
  const fs::path path = temp_file("roundtrip.csv", out.str());
  const TraceOracle loaded = load_trace(path);
  CHECK(loaded.grid() == kGrid);
  CHECK(loaded.series(39) == series[39]);
  fs::remove(path);
}

TEST_CASE("trace schema errors name the offending line") {
  auto expect_error = [](const std::string& name, const std::string& csv, const std::string& needle) {
    const fs::path path = temp_file(name, csv);
    try {
      (void)load_trace(path);
      FAIL("expected a schema error for " << name);
    } catch (const SchemaError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
    fs::remove(path);
  };
  const std::string header = "cpu_limit,sample_index,runtime_seconds\n";
  expect_error("gap.csv", header + "0.1,0,1\n0.2,0,1\n0.4,0,1\n", "uniform");
  expect_error("negative.csv", header + "0.1,0,1\n0.2,0,-1.0\n", "line 3");
  expect_error("duplicate.csv", header + "0.1,0,1\n0.1,0,2\n0.2,0,1\n", "line 3");
  expect_error("header.csv", "limit,idx,rt\n0.1,0,1\n", "line 1");
  expect_error("fields.csv", header + "0.1,0\n", "line 2");
  CHECK_THROWS_AS(load_trace("/nonexistent/trace.csv"), SchemaError);
}

TEST_CASE("command oracle reads one runtime per line") {
  const LimitGrid grid(0.1, 1.0, 0.1);
  const CommandOracle oracle("for i in $(seq 1 40); do echo {limit}; done", grid, std::chrono::seconds(10));
  CHECK(oracle.command_for(0.5).find("0.5") != std::string::npos);
  const ProbeResult r = probe(oracle, 0.5, StoppingRule{});
  CHECK(r.point.n_samples == 30);
  CHECK(r.point.mean_runtime == doctest::Approx(0.5));
  CHECK(r.duration_seconds >= 0.0);

  const CommandOracle garbage("echo not-a-number", grid, std::chrono::seconds(10));
  CHECK_THROWS_AS(probe(garbage, 0.5, StoppingRule{}), OracleError);

  const CommandOracle too_short("echo 1.0", grid, std::chrono::seconds(10));
  CHECK_THROWS_AS(probe(too_short, 0.5, StoppingRule{}), OracleError);

  const auto start = std::chrono::steady_clock::now();
  const CommandOracle slow("sleep 30", grid, std::chrono::milliseconds(300));
  CHECK_THROWS_AS(probe(slow, 0.5, StoppingRule{}), OracleError);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}
