// Acceptance suite: one line per criterion, non-zero exit if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "rtprof/errors.hpp"
#include "rtprof/metrics.hpp"
#include "rtprof/model.hpp"
#include "rtprof/seeding.hpp"
#include "rtprof/selection.hpp"
#include "rtprof/session.hpp"
#include "rtprof/stopping.hpp"

using namespace rtprof;

namespace {

// Tolerances and budgets.
constexpr double kTierNestingTol = 1e-12;
constexpr double kFitSmapeTol = 1e-3;
constexpr double kInversionTol = 1e-9;
constexpr double kSmapeHandTol = 1e-12;
constexpr double kScaleTol = 1e-12;
constexpr double kQuantileTol = 1e-6;
constexpr double kStep6SmapeMax = 0.10;
constexpr double kTimeRatioMax = 0.60;
constexpr double kSmapeGapMax = 0.05;
constexpr int kEarlyStopMinPasses = 40;
constexpr std::size_t kRepetitions = 50;
constexpr std::uint64_t kMasterSeed = 20261016;
constexpr double kNoise = 0.05;

// Steep at low limits, nearly flat towards l_max.
const RuntimeModel kTruth{5, 1.0, 1.5, 1.0, 1.0};
const LimitGrid kGrid(0.1, 4.0, 0.1);

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_failure_ = what;
    }
  }
  Outcome outcome(const std::string& summary) const {
    return {pass_, pass_ ? summary : first_failure_ + "; " + summary};
  }

 private:
  bool pass_ = true;
  std::string first_failure_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

ProfilingConfig session_config(StrategyKind kind, int max_steps) {
  ProfilingConfig c;
  c.grid = kGrid;
  c.n_initial = 3;
  c.p = 0.05;
  c.strategy = kind;
  c.max_steps = max_steps;
  return c;
}

Outcome algorithm_one() {
  Check check;
  const LimitGrid two(0.1, 2.0, 0.1), sixteen(0.1, 16.0, 0.1);
  for (double p : {0.025, 0.05, 0.075, 0.1}) {
    check.require(std::abs(initial_limits(p, 3, two).synthetic_limit - 0.2) < 1e-12, "l_p != 0.2 at p=" + fmt(p));
  }
  for (double p : {0.125, 0.15}) {
    check.require(std::abs(initial_limits(p, 3, two).synthetic_limit - 0.3) < 1e-12, "l_p != 0.3 at p=" + fmt(p));
  }
  check.require(std::abs(initial_limits(0.025, 3, sixteen).synthetic_limit - 0.4) < 1e-12, "l_p != 0.4 at l_max=16");

  int feasible = 0, infeasible = 0;
  for (double l_max : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const LimitGrid grid(0.1, l_max, 0.1);
    for (double p : {0.025, 0.05, 0.075, 0.1, 0.125, 0.15}) {
      for (int n : {2, 3, 4}) {
        try {
          const auto init = initial_limits(p, n, grid);
          ++feasible;
          auto sorted = init.limits;
          std::sort(sorted.begin(), sorted.end());
          const bool unique = std::adjacent_find(sorted.begin(), sorted.end(),
                                                 [](double a, double b) { return std::abs(a - b) < 1e-9; }) ==
                              sorted.end();
          const double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
          check.require(init.limits.size() == static_cast<std::size_t>(n), "wrong size");
          check.require(unique, "duplicate initial limit");
          check.require(sum <= l_max + 1e-9, "sum above l_max");
        } catch (const InfeasibleConfiguration&) {
          ++infeasible;
        }
      }
    }
  }
  return check.outcome(std::to_string(feasible) + " feasible cells checked, " + std::to_string(infeasible) +
                       " rejected as infeasible");
}

Outcome tier_table() {
  Check check;
  for (std::size_t n = 1; n <= 10; ++n) {
    const int expected = n >= 5 ? 5 : static_cast<int>(n);
    check.require(select_tier(n) == expected, "select_tier(" + std::to_string(n) + ")");
  }
  std::mt19937_64 rng(derive_seed(kMasterSeed, {2}));
  std::uniform_real_distribution<double> a(1e-3, 100.0), b(0.05, 5.0), c(0.0, 10.0), r(0.01, 64.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RuntimeModel five{5, a(rng), b(rng), c(rng), 1.0};
    const RuntimeModel four{4, five.a, five.b, five.c, 1.0};
    const double x = r(rng);
    worst = std::max(worst, std::abs(eval(five, x) - eval(four, x)) / eval(four, x));
  }
  check.require(worst <= kTierNestingTol, "tier nesting error " + fmt(worst));
  return check.outcome("max tier 5/4 relative gap " + fmt(worst));
}

Outcome fit_recovery() {
  Check check;
  std::mt19937_64 rng(derive_seed(kMasterSeed, {3}));
  std::uniform_real_distribution<double> log_a(std::log(0.01), std::log(10.0)), b(0.3, 2.0), unit(0.0, 1.0),
      log_d(std::log(0.5), std::log(2.0));
  const Eigen::ArrayXd limits = kGrid.limits();
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const double a = std::exp(log_a(rng));
    const RuntimeModel truth{5, a, b(rng), 0.5 * a * unit(rng), std::exp(log_d(rng))};
    const Eigen::ArrayXd runtimes = eval(truth, limits);
    const std::vector<double> xs(limits.begin(), limits.end()), ys(runtimes.begin(), runtimes.end());
    try {
      const FitResult f = fit(xs, ys);
      const double s = smape(runtimes, eval(f.model, limits));
      worst = std::max(worst, s);
      if (!(s <= kFitSmapeTol)) ++failures;
    } catch (const FitFailure&) {
      ++failures;
    }
  }
  check.require(failures == 0, std::to_string(failures) + " of 100 models above tolerance");
  return check.outcome("worst SMAPE " + fmt(worst) + " over 100 models");
}

Outcome inversion_round_trip() {
  Check check;
  std::mt19937_64 rng(derive_seed(kMasterSeed, {4}));
  std::uniform_real_distribution<double> log_a(std::log(1e-3), std::log(1e3)), b(0.1, 4.0), c(0.0, 5.0),
      log_d(std::log(0.1), std::log(10.0)), log_t(std::log(1e-3), std::log(1e3)), span(0.01, 10.0);
  std::uniform_int_distribution<int> tier(1, 5);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    RuntimeModel m = RuntimeModel::neutral(tier(rng));
    if (m.tier >= 2) m.a = std::exp(log_a(rng));
    if (m.tier >= 3) m.b = b(rng);
    if (m.tier >= 4) m.c = c(rng);
    if (m.tier >= 5) m.d = std::exp(log_d(rng));
    const double t = m.c > 0.0 ? m.c * (1.0 + span(rng)) : std::exp(log_t(rng));
    const auto r = invert_unclamped(m, t);
    if (!r) {
      check.require(false, "no inverse for a reachable target");
      continue;
    }
    worst = std::max(worst, std::abs(eval(m, *r) - t) / t);
  }
  check.require(worst < kInversionTol, "round trip error " + fmt(worst));
  return check.outcome("max relative error " + fmt(worst) + " over 10^4 draws");
}

Outcome smape_correctness() {
  Check check;
  Eigen::ArrayXd y(2), p(2);
  y << 2, 4;
  p << 3, 3;
  check.require(smape(y, y) == 0.0, "identity is not zero");
  check.require(std::abs(smape(y, p) - 1.0 / 6.0) <= kSmapeHandTol, "hand example");

  std::mt19937_64 rng(derive_seed(kMasterSeed, {5}));
  std::uniform_real_distribution<double> u(1e-3, 1e3), pred(-10.0, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 50);
    Eigen::ArrayXd a(n), b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      a[k] = u(rng);
      b[k] = pred(rng);
    }
    const double s = smape(a, b);
    check.require(s >= 0.0 && s <= 1.0, "out of [0, 1]: " + fmt(s));
    // Scale invariance needs predictions that stay above the clamp after scaling.
    const Eigen::ArrayXd positive = b.abs() + 1e-3;
    const double base = smape(a, positive);
    for (double k : {1e-3, 1.0, 1e3}) {
      check.require(std::abs(smape(k * a, k * positive) - base) <= kScaleTol, "scale invariance at k=" + fmt(k));
    }
  }
  return check.outcome("identity, hand example, scale invariance and range on 10^4 vectors");
}

Outcome stopping_statistics() {
  Check check;
  double worst = 0.0;
  for (int df = 1; df <= 200; ++df) {
    const std::size_t n = static_cast<std::size_t>(df) + 1;
    const double variance = 2.5;
    const double expected =
        2.0 * oracle::t_quantile_quadrature(0.975, df) * std::sqrt(variance / static_cast<double>(n));
    worst = std::max(worst, std::abs(ci_width(1.0, variance, n, 0.95) - expected) / expected);
  }
  check.require(worst <= kQuantileTol, "ci width error " + fmt(worst));

  std::vector<double> tight, loose;
  for (std::uint64_t s = 0; s < 100; ++s) {
    std::mt19937_64 rng(derive_seed(kMasterSeed, {6, s}));
    std::normal_distribution<double> dist(1.0, 0.2);
    StoppingMonitor strict({0.95, 0.02, 30, 10000}), lax({0.95, 0.10, 30, 10000});
    std::size_t n_strict = 0, n_lax = 0;
    for (std::size_t i = 1; i <= 10000 && (!n_strict || !n_lax); ++i) {
      const double x = std::max(dist(rng), 1e-6);
      if (!n_strict && strict.push(x)) n_strict = i;
      if (!n_lax && lax.push(x)) n_lax = i;
    }
    tight.push_back(static_cast<double>(n_strict));
    loose.push_back(static_cast<double>(n_lax));
  }
  const double m_tight = oracle::median(tight), m_loose = oracle::median(loose);
  check.require(m_tight > m_loose, "median stopping n not larger at lambda 0.02");
  return check.outcome("max ci width error " + fmt(worst) + "; median n " + fmt(m_tight) + " (0.02) vs " +
                       fmt(m_loose) + " (0.10)");
}

BenchmarkReport strategy_benchmark() {
  const OracleFactory factory = [](const NamedConfig& cfg, std::uint64_t seed) {
    return std::make_unique<SyntheticOracle>(kTruth, kNoise, seed, cfg.config.grid);
  };
  return run_benchmark(factory, {{"synthetic", session_config(StrategyKind::Nms, 6)}},
                       {StrategyKind::Nms, StrategyKind::BinarySearch, StrategyKind::BayesOpt, StrategyKind::Random},
                       kRepetitions, kMasterSeed);
}

Outcome stepwise_convergence() {
  Check check;
  const BenchmarkReport report = strategy_benchmark();
  check.require(report.failures.empty(), std::to_string(report.failures.size()) + " failed sessions");
  auto median_at = [&](StrategyKind kind, std::size_t step) {
    std::vector<double> v;
    for (const auto& row : report.rows)
      if (row.strategy == kind && row.step == step) v.push_back(row.smape);
    return v.empty() ? std::nan("") : oracle::median(v);
  };
  const double nms6 = median_at(StrategyKind::Nms, 6);
  check.require(nms6 <= kStep6SmapeMax, "NMS step 6 median " + fmt(nms6));
  std::ostringstream detail;
  detail << "NMS@6 " << fmt(nms6);
  for (std::size_t step : {4u, 5u}) {
    const double nms = median_at(StrategyKind::Nms, step), bs = median_at(StrategyKind::BinarySearch, step),
                 bo = median_at(StrategyKind::BayesOpt, step);
    check.require(nms <= bs, "step " + std::to_string(step) + ": NMS " + fmt(nms) + " > BS " + fmt(bs));
    check.require(nms <= bo, "step " + std::to_string(step) + ": NMS " + fmt(nms) + " > BO " + fmt(bo));
    detail << "; step " << step << " NMS/BS/BO " << fmt(nms) << "/" << fmt(bs) << "/" << fmt(bo);
  }
  return check.outcome(detail.str());
}

Outcome early_stopping_saving() {
  Check check;
  int passes = 0;
  std::vector<double> ratios;
  for (std::size_t rep = 0; rep < kRepetitions; ++rep) {
    const SyntheticOracle oracle(kTruth, kNoise, derive_seed(kMasterSeed, {8, rep}), kGrid);
    ProfilingConfig early = session_config(StrategyKind::Nms, 6);
    early.stopping = StoppingRule{0.95, 0.10, 30, 10000};
    ProfilingConfig fixed = early;
    fixed.stopping = StoppingRule::fixed(10000);
    const auto reference = oracle.reference_runtimes();
    const SessionReport a = run_session(oracle, early, reference), b = run_session(oracle, fixed, reference);
    const double ratio = a.total_time / b.total_time;
    ratios.push_back(ratio);
    if (ratio <= kTimeRatioMax && std::abs(*a.models.back().smape - *b.models.back().smape) <= kSmapeGapMax) ++passes;
  }
  check.require(passes >= kEarlyStopMinPasses, std::to_string(passes) + " of 50 repetitions qualify");
  return check.outcome(std::to_string(passes) + "/50 repetitions qualify; median time ratio " +
                       fmt(oracle::median(ratios)));
}

Outcome winner_tally() {
  Check check;
  Eigen::MatrixXd table(3, 1);
  table << 0.10, 0.108, 0.13;
  check.require(count_wins(table, 0.0) == Eigen::Vector3i(1, 0, 0), "dark tally");
  check.require(count_wins(table, kNearWinTolerance) == Eigen::Vector3i(1, 1, 0), "light tally");
  Eigen::MatrixXd tie(2, 1);
  tie << 0.10, 0.10;
  check.require(count_wins(tie, 0.0) == Eigen::Vector2i(1, 1), "exact tie");

  auto csv_bytes = [] {
    const BenchmarkReport report = strategy_benchmark();
    std::ostringstream out;
    write_smape_csv(out, report);
    write_time_csv(out, report);
    write_wins_csv(out, report);
    return out.str();
  };
  const std::string first = csv_bytes(), second = csv_bytes();
  check.require(first == second, "benchmark CSV differs between runs");
  return check.outcome("tolerance tallies match; " + std::to_string(first.size()) + " CSV bytes identical across runs");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "initial limit selection", 1.0, algorithm_one},
      {2, "tier table", 1.0, tier_table},
      {3, "fit recovery", 30.0, fit_recovery},
      {4, "inversion round trip", 5.0, inversion_round_trip},
      {5, "smape correctness", 5.0, smape_correctness},
      {6, "early-stopping statistics", 60.0, stopping_statistics},
      {7, "step-wise convergence", 300.0, stepwise_convergence},
      {8, "early-stopping time saving", 300.0, early_stopping_saving},
      {9, "winner tally and determinism", 120.0, winner_tally},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_seconds) {
      out.pass = false;
      out.detail += "; over time budget";
    }
    if (!out.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2fs / %.0fs]\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), seconds, c.budget_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
