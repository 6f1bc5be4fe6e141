#include "rtprof/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rtprof/errors.hpp"
#include "rtprof/gaussian_process.hpp"
#include "rtprof/seeding.hpp"

namespace rtprof {

namespace {

constexpr std::array<double, 6> kStandardFractions{0.025, 0.05, 0.075, 0.1, 0.125, 0.15};
constexpr double kSumTolerance = 1e-9;

std::string format_limit(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

bool contains_limit(const std::vector<double>& limits, double v) {
  return std::any_of(limits.begin(), limits.end(), [v](double x) { return std::abs(x - v) <= 1e-9; });
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Nms: return "nms";
    case StrategyKind::BinarySearch: return "bs";
    case StrategyKind::BayesOpt: return "bo";
    case StrategyKind::Random: return "random";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "nms" || lower == "nested") return StrategyKind::Nms;
  if (lower == "bs" || lower == "binary" || lower == "binarysearch") return StrategyKind::BinarySearch;
  if (lower == "bo" || lower == "bayes" || lower == "bayesopt") return StrategyKind::BayesOpt;
  if (lower == "random") return StrategyKind::Random;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "' (expected nms, bs, bo, random)");
}

InitialLimits initial_limits(double p, int n, const LimitGrid& grid) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("synthetic target fraction p must be in (0, 1)");
  }
  if (n < 2 || n > 4) {
    throw std::invalid_argument("n_initial must be 2, 3 or 4, got " + std::to_string(n));
  }
  const double l_min = grid.l_min();
  const double l_max = grid.l_max();
  if (n == 4 && l_max < 4.0 * l_min - kSumTolerance) {
    throw InfeasibleConfiguration("four initial limits need l_max >= 4 * l_min");
  }

  InitialLimits out;
  if (std::none_of(kStandardFractions.begin(), kStandardFractions.end(),
                   [p](double f) { return std::abs(f - p) < 1e-12; })) {
    out.warnings.push_back("non-standard synthetic target fraction p = " + format_limit(p));
  }

  auto& chosen = out.limits;
  auto push = [&](double value) {
    double v = grid.snap(value);
    while (contains_limit(chosen, v)) {
      if (v + grid.delta() > l_max + kSumTolerance) {
        throw InfeasibleConfiguration("cannot make initial limit " + format_limit(v) + " unique within the grid");
      }
      v = grid.snap(v + grid.delta());
    }
    chosen.push_back(v);
  };
  auto sum = [&] { return std::accumulate(chosen.begin(), chosen.end(), 0.0); };

  const double l_p = grid.snap(std::max(0.2, l_max * p));
  const double l_m = grid.snap((l_min + l_max) / 2.0);
  const double l_q = grid.snap((l_p + l_max) / 4.0);

  push(l_p);
  if (n == 2) {
    push(l_max - sum());
  } else if (n == 3 && l_max > 1.0) {
    push(l_m);
    push(l_max - sum());
  } else if (n == 3) {
    push(l_q);
    push(l_max / 2.0);
  } else {
    push(l_q);
    push((l_p + chosen.back()) / 2.0);
    push(l_max - sum());
  }

  if (chosen.size() != static_cast<std::size_t>(n) || sum() > l_max + kSumTolerance) {
    std::ostringstream msg;
    msg << "initial limits {";
    for (std::size_t i = 0; i < chosen.size(); ++i) msg << (i ? ", " : "") << chosen[i];
    msg << "} sum above l_max = " << l_max;
    throw InfeasibleConfiguration(msg.str());
  }
  out.synthetic_limit = chosen.front();
  if (std::abs(out.synthetic_limit - l_min) <= 1e-9) {
    out.warnings.push_back("synthetic target limit equals the smallest grid limit " + format_limit(l_min) +
                           "; profiling it prolongs the session");
  }
  return out;
}

SyntheticTarget synthetic_target(const ProfilePoint& point, const LimitGrid& grid, const StoppingRule& rule) {
  if (point.n_samples < rule.min_samples) {
    throw std::invalid_argument("synthetic target point has " + std::to_string(point.n_samples) +
                                " samples, below the stopping minimum " + std::to_string(rule.min_samples));
  }
  if (!(point.mean_runtime > 0.0)) {
    throw std::invalid_argument("synthetic target point must have a positive mean runtime");
  }
  SyntheticTarget target{point.mean_runtime, std::nullopt};
  if (std::abs(point.cpu_limit - grid.l_min()) <= 1e-9) {
    target.warning = "synthetic target limit " + format_limit(point.cpu_limit) +
                     " is the smallest grid limit; it should be excluded";
  }
  return target;
}

double transform_observation(double runtime, double target) {
  if (!(target > 0.0)) {
    throw std::invalid_argument("target runtime must be positive");
  }
  const double ratio = runtime / target;
  return runtime <= target ? ratio : -ratio;
}

std::vector<double> StrategyState::observed_limits() const {
  std::vector<double> limits;
  limits.reserve(observed.size());
  for (const auto& p : observed) limits.push_back(p.cpu_limit);
  return limits;
}

StrategyState make_strategy_state(StrategyKind kind, double target_runtime, const LimitGrid& grid,
                                  std::uint64_t seed) {
  if (!(target_runtime > 0.0)) {
    throw std::invalid_argument("target runtime must be positive");
  }
  StrategyState state;
  state.kind = kind;
  state.target_runtime = target_runtime;
  switch (kind) {
    case StrategyKind::Nms: state.detail = NmsState{}; break;
    case StrategyKind::BinarySearch:
      state.detail = BinarySearchState{0, static_cast<long>(grid.size()) - 1, std::nullopt};
      break;
    case StrategyKind::BayesOpt: {
      BayesOptState bo;
      bo.length_scale = 0.25 * (grid.l_max() - grid.l_min());
      state.detail = bo;
      break;
    }
    case StrategyKind::Random: state.detail = RandomState{seed}; break;
  }
  return state;
}

namespace {

void narrow(BinarySearchState& bs, std::size_t mid, double runtime, double target) {
  if (runtime > target) {
    bs.lower = static_cast<long>(mid) + 1;  // too slow: more CPU
  } else {
    bs.upper = static_cast<long>(mid) - 1;  // target met: try less CPU
  }
}

}  // namespace

void record(StrategyState& state, const ProfilePoint& point, const LimitGrid& grid) {
  if (contains_limit(state.observed_limits(), point.cpu_limit)) {
    throw std::invalid_argument("limit " + format_limit(point.cpu_limit) + " was already recorded");
  }
  state.observed.push_back(point);
  if (auto* bs = std::get_if<BinarySearchState>(&state.detail)) {
    const auto idx = grid.index_of(point.cpu_limit);
    if (bs->pending && idx && *idx == *bs->pending) {
      narrow(*bs, *idx, point.mean_runtime, state.target_runtime);
      bs->pending.reset();
    }
  }
}

std::optional<double> next_limit(StrategyState& state, const LimitGrid& grid) {
  switch (state.kind) {
    case StrategyKind::Nms: return next_limit_nms(state, grid);
    case StrategyKind::BinarySearch: return next_limit_bs(state, grid);
    case StrategyKind::BayesOpt: return next_limit_bo(state, grid);
    case StrategyKind::Random: return next_limit_random(state, grid);
  }
  return std::nullopt;
}

std::optional<double> next_limit_nms(StrategyState& state, const LimitGrid& grid) {
  if (state.kind != StrategyKind::Nms) {
    throw std::invalid_argument("next_limit_nms called on a non-NMS state");
  }
  if (state.observed.empty()) {
    throw std::invalid_argument("NMS needs at least one observation");
  }
  auto& nms = std::get<NmsState>(state.detail);
  if (!nms.model || nms.fitted_on != state.observed.size()) {
    nms.model = fit(state.observed, nms.model).model;
    nms.fitted_on = state.observed.size();
  }
  const Inversion inv = invert(*nms.model, state.target_runtime, grid);
  nms.target_unreachable = inv.unreachable;
  return grid.nearest_unprofiled(inv.limit, state.observed_limits());
}

std::optional<double> next_limit_bs(StrategyState& state, const LimitGrid& grid) {
  if (state.kind != StrategyKind::BinarySearch) {
    throw std::invalid_argument("next_limit_bs called on a non-binary-search state");
  }
  auto& bs = std::get<BinarySearchState>(state.detail);
  while (bs.lower <= bs.upper) {
    const auto mid = static_cast<std::size_t>(bs.lower + (bs.upper - bs.lower) / 2);
    const double limit = grid.limit(mid);
    const auto seen = std::find_if(state.observed.begin(), state.observed.end(),
                                   [&](const ProfilePoint& p) { return std::abs(p.cpu_limit - limit) <= 1e-9; });
    if (seen == state.observed.end()) {
      bs.pending = mid;
      return limit;
    }
    // Already profiled: its runtime decides the half for free.
    narrow(bs, mid, seen->mean_runtime, state.target_runtime);
  }
  bs.pending.reset();
  return std::nullopt;
}

std::optional<double> next_limit_bo(StrategyState& state, const LimitGrid& grid) {
  if (state.kind != StrategyKind::BayesOpt) {
    throw std::invalid_argument("next_limit_bo called on a non-BO state");
  }
  if (state.observed.empty()) {
    throw std::invalid_argument("BO needs at least one observation");
  }
  auto& bo = std::get<BayesOptState>(state.detail);

  const auto n = static_cast<Eigen::Index>(state.observed.size());
  Eigen::VectorXd xs(n);
  Eigen::VectorXd ys(n);
  bo.transformed.clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = state.observed[static_cast<std::size_t>(i)];
    xs[i] = p.cpu_limit;
    ys[i] = transform_observation(p.mean_runtime, state.target_runtime);
    bo.transformed.push_back(ys[i]);
  }
  const double variance = n > 1 ? (ys.array() - ys.mean()).square().sum() / static_cast<double>(n - 1) : 0.0;
  bo.signal_variance = std::max(variance, 1e-6);

  const double range = grid.l_max() - grid.l_min();
  std::optional<gp::Posterior> posterior;
  double best_lml = -std::numeric_limits<double>::infinity();
  // Default length scale first so it wins ties.
  for (double fraction : {0.25, 0.1, 0.5}) {
    gp::Posterior candidate(gp::Matern52{fraction * range, bo.signal_variance}, bo.noise_variance, xs, ys);
    const double lml = candidate.log_marginal_likelihood();
    if (!posterior || lml > best_lml) {
      best_lml = lml;
      bo.length_scale = fraction * range;
      posterior.emplace(std::move(candidate));
    }
  }

  const double best_y = ys.maxCoeff();
  std::optional<double> choice;
  double best_ei = -1.0;
  for (std::size_t idx : grid.unprofiled_indices(state.observed_limits())) {
    const double limit = grid.limit(idx);
    const auto [mean, var] = posterior->predict(limit);
    const double ei = gp::expected_improvement(mean, var, best_y);
    if (ei > best_ei) {
      best_ei = ei;
      choice = limit;
    }
  }
  return choice;
}

std::optional<double> next_limit_random(const StrategyState& state, const LimitGrid& grid) {
  if (state.kind != StrategyKind::Random) {
    throw std::invalid_argument("next_limit_random called on a non-random state");
  }
  const auto candidates = grid.unprofiled_indices(state.observed_limits());
  if (candidates.empty()) {
    return std::nullopt;
  }
  const auto& rs = std::get<RandomState>(state.detail);
  std::mt19937_64 rng(derive_seed(rs.seed, {state.observed.size()}));
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return grid.limit(candidates[pick(rng)]);
}

}  // namespace rtprof
