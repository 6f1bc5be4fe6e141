#include "rtprof/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

namespace rtprof {

namespace {

constexpr double kMinA = 1e-9;
constexpr double kMaxA = 1e9;
constexpr double kMinB = 1e-3;
constexpr double kMaxB = 10.0;
constexpr double kMinD = 1e-3;
constexpr double kMaxD = 1e3;

constexpr int kMaxIterations = 200;
constexpr double kRelativeTolerance = 1e-10;
constexpr double kMaxDamping = 1e16;

bool is_active(int tier, char param) {
  switch (param) {
    case 'a': return tier >= 2;
    case 'b': return tier >= 3;
    case 'c': return tier >= 4;
    case 'd': return tier >= 5;
    default: return false;
  }
}

// Log-space parameter vector for tiers 3-5: [log a, log b, (c), (log d)].
struct Parameterization {
  int tier;
  double c_max;

  Eigen::Index size() const { return active_parameter_count(tier); }

  Eigen::VectorXd encode(const RuntimeModel& m) const {
    Eigen::VectorXd theta(size());
    theta[0] = std::log(m.a);
    theta[1] = std::log(m.b);
    if (tier >= 4) theta[2] = m.c;
    if (tier >= 5) theta[3] = std::log(m.d);
    return clamp(theta);
  }

  RuntimeModel decode(const Eigen::VectorXd& theta) const {
    RuntimeModel m = RuntimeModel::neutral(tier);
    m.a = std::exp(theta[0]);
    m.b = std::exp(theta[1]);
    if (tier >= 4) m.c = theta[2];
    if (tier >= 5) m.d = std::exp(theta[3]);
    return m;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd theta) const {
    theta[0] = std::clamp(theta[0], std::log(kMinA), std::log(kMaxA));
    theta[1] = std::clamp(theta[1], std::log(kMinB), std::log(kMaxB));
    if (tier >= 4) theta[2] = std::clamp(theta[2], 0.0, c_max);
    if (tier >= 5) theta[3] = std::clamp(theta[3], std::log(kMinD), std::log(kMaxD));
    return theta;
  }
};

struct Problem {
  Eigen::ArrayXd limits;
  Eigen::ArrayXd runtimes;

  Eigen::VectorXd residuals(const RuntimeModel& m) const {
    return (eval(m, limits) - runtimes).matrix();
  }

  Eigen::MatrixXd jacobian(const RuntimeModel& m) const {
    const Eigen::Index n = limits.size();
    Eigen::MatrixXd jac(n, active_parameter_count(m.tier));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scaled = limits[i] * m.d;
      const double power = m.a * std::pow(scaled, -m.b);
      jac(i, 0) = power;
      jac(i, 1) = -power * std::log(scaled) * m.b;
      if (m.tier >= 4) jac(i, 2) = 1.0;
      if (m.tier >= 5) jac(i, 3) = -m.b * power;
    }
    return jac;
  }
};

double squared_norm(const Eigen::VectorXd& r) { return r.squaredNorm(); }

FitResult levenberg_marquardt(const Problem& problem, const Parameterization& param,
                              const RuntimeModel& start) {
  Eigen::VectorXd theta = param.encode(start);
  RuntimeModel model = param.decode(theta);
  double ssr = squared_norm(problem.residuals(model));
  if (!std::isfinite(ssr)) {
    throw FitFailure("non-finite residual at the initial iterate", model);
  }
  const double floor = 1e-28 * problem.runtimes.square().sum();

  double damping = 1e-3;
  int iterations = 0;
  bool converged = false;
  while (iterations < kMaxIterations && !converged) {
    ++iterations;
    if (ssr <= floor) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jac = problem.jacobian(model);
    const Eigen::VectorXd residual = problem.residuals(model);
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * residual;
    Eigen::VectorXd scale = normal.diagonal();
    const double scale_floor = 1e-12 * std::max(scale.maxCoeff(), 1e-300);
    scale = scale.cwiseMax(scale_floor);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += damping * scale;
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      const Eigen::VectorXd candidate = param.clamp(theta + step);
      const RuntimeModel trial = param.decode(candidate);
      const double trial_ssr = squared_norm(problem.residuals(trial));
      if (std::isfinite(trial_ssr) && trial_ssr < ssr) {
        const double relative_change = (ssr - trial_ssr) / ssr;
        theta = candidate;
        model = trial;
        ssr = trial_ssr;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        converged = relative_change < kRelativeTolerance;
      } else {
        damping *= 4.0;
        if (damping > kMaxDamping) {
          // No descent direction left inside the bounds: a (projected) local minimum.
          converged = true;
          break;
        }
      }
    }
  }
  return FitResult{model, std::sqrt(ssr), iterations, converged};
}

RuntimeModel warm_start_model(const RuntimeModel& warm, int tier, double c_max) {
  RuntimeModel m = RuntimeModel::neutral(tier);
  if (is_active(warm.tier, 'a')) m.a = warm.a;
  if (is_active(warm.tier, 'b')) m.b = warm.b;
  if (is_active(warm.tier, 'c') && tier >= 4) m.c = std::min(warm.c, c_max);
  if (is_active(warm.tier, 'd') && tier >= 5) m.d = warm.d;
  return m;
}

std::vector<RuntimeModel> cold_starts(const Problem& problem, int tier) {
  const double min_runtime = problem.runtimes.minCoeff();
  const double max_runtime = problem.runtimes.maxCoeff();
  Eigen::Index smallest = 0;
  const double min_limit = problem.limits.minCoeff(&smallest);

  std::vector<RuntimeModel> starts;

  RuntimeModel base = RuntimeModel::neutral(tier);
  base.a = max_runtime * min_limit;
  if (tier >= 4) base.c = 0.9 * min_runtime;
  starts.push_back(base);

  // Straight line through (log R, log r) gives a and b of the pure power law.
  const Eigen::ArrayXd x = problem.limits.log();
  const Eigen::ArrayXd y = problem.runtimes.log();
  const double x_mean = x.mean();
  const double y_mean = y.mean();
  const double sxx = (x - x_mean).square().sum();
  if (sxx > 0.0) {
    const double slope = ((x - x_mean) * (y - y_mean)).sum() / sxx;
    RuntimeModel power = RuntimeModel::neutral(tier);
    power.b = std::clamp(-slope, kMinB, kMaxB);
    power.a = std::clamp(std::exp(y_mean + power.b * x_mean), kMinA, kMaxA);
    starts.push_back(power);
  }

  for (double b : {0.5, 2.0}) {
    RuntimeModel through_first = RuntimeModel::neutral(tier);
    through_first.b = b;
    through_first.a = std::clamp(problem.runtimes[smallest] * std::pow(min_limit, b), kMinA, kMaxA);
    starts.push_back(through_first);
  }
  return starts;
}

void check_points(std::span<const double> limits, std::span<const double> runtimes) {
  if (limits.empty()) {
    throw std::invalid_argument("fit requires at least one point");
  }
  if (limits.size() != runtimes.size()) {
    throw std::invalid_argument("fit requires equally many limits and runtimes");
  }
  for (std::size_t i = 0; i < limits.size(); ++i) {
    if (!(limits[i] > 0.0) || !std::isfinite(limits[i])) {
      throw std::invalid_argument("fit requires positive cpu limits");
    }
    if (!(runtimes[i] > 0.0) || !std::isfinite(runtimes[i])) {
      throw std::invalid_argument("fit requires positive mean runtimes");
    }
  }
  std::vector<double> sorted(limits.begin(), limits.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] <= 1e-9) {
      throw std::invalid_argument("fit requires distinct cpu limits, duplicate at " +
                                  std::to_string(sorted[i]));
    }
  }
}

}  // namespace

RuntimeModel RuntimeModel::neutral(int tier) {
  RuntimeModel m;
  m.tier = tier;
  return m;
}

void RuntimeModel::validate() const {
  if (tier < 1 || tier > 5) {
    throw std::invalid_argument("model tier must be in 1..5, got " + std::to_string(tier));
  }
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("model parameter a must be positive");
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("model parameter b must be positive");
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("model parameter c must be non-negative");
  if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("model parameter d must be positive");
}

double eval(const RuntimeModel& model, double limit) {
  if (!(limit > 0.0)) {
    throw std::invalid_argument("eval requires a positive cpu limit");
  }
  switch (model.tier) {
    case 1: return 1.0 / limit;
    case 2: return model.a / limit;
    case 3: return model.a * std::pow(limit, -model.b);
    case 4: return model.a * std::pow(limit, -model.b) + model.c;
    case 5: return model.a * std::pow(limit * model.d, -model.b) + model.c;
    default: throw std::invalid_argument("model tier must be in 1..5");
  }
}

int select_tier(std::size_t n_points) {
  if (n_points == 0) {
    throw std::invalid_argument("select_tier requires at least one point");
  }
  return static_cast<int>(std::min<std::size_t>(n_points, 5));
}

int active_parameter_count(int tier) { return std::clamp(tier - 1, 0, 4); }

FitResult fit(std::span<const double> limits, std::span<const double> runtimes,
              const std::optional<RuntimeModel>& warm_start) {
  check_points(limits, runtimes);
  const int tier = select_tier(limits.size());

  Problem problem{Eigen::Map<const Eigen::ArrayXd>(limits.data(), static_cast<Eigen::Index>(limits.size())),
                  Eigen::Map<const Eigen::ArrayXd>(runtimes.data(), static_cast<Eigen::Index>(runtimes.size()))};

  if (tier == 1) {
    RuntimeModel m = RuntimeModel::neutral(1);
    return FitResult{m, problem.residuals(m).norm(), 0, true};
  }
  if (tier == 2) {
    RuntimeModel m = RuntimeModel::neutral(2);
    const Eigen::ArrayXd inv = problem.limits.inverse();
    m.a = std::clamp((problem.runtimes * inv).sum() / inv.square().sum(), kMinA, kMaxA);
    return FitResult{m, problem.residuals(m).norm(), 0, true};
  }

  const Parameterization param{tier, problem.runtimes.minCoeff()};
  std::optional<FitResult> best;
  auto consider = [&](const RuntimeModel& start) {
    FitResult candidate = levenberg_marquardt(problem, param, start);
    // Later starts must be strictly better to displace an earlier one.
    if (!best || candidate.residual_norm < best->residual_norm * (1.0 - 1e-9)) {
      best = candidate;
    }
  };
  for (const auto& start : cold_starts(problem, tier)) {
    consider(start);
  }
  // The warm start goes last so it only matters when it reaches a better basin;
  // otherwise a refit does not depend on the history that produced it.
  if (warm_start) {
    warm_start->validate();
    consider(warm_start_model(*warm_start, tier, param.c_max));
  }
  return *best;
}

FitResult fit(std::span<const ProfilePoint> points, const std::optional<RuntimeModel>& warm_start) {
  std::vector<double> limits;
  std::vector<double> runtimes;
  limits.reserve(points.size());
  runtimes.reserve(points.size());
  for (const auto& p : points) {
    limits.push_back(p.cpu_limit);
    runtimes.push_back(p.mean_runtime);
  }
  return fit(limits, runtimes, warm_start);
}

std::optional<double> invert_unclamped(const RuntimeModel& model, double target) {
  if (!(target > 0.0)) {
    throw std::invalid_argument("invert requires a positive target runtime");
  }
  switch (model.tier) {
    case 1: return 1.0 / target;
    case 2: return model.a / target;
    case 3: return std::pow(target / model.a, -1.0 / model.b);
    case 4:
    case 5: {
      if (target <= model.c) {
        return std::nullopt;
      }
      const double r = std::pow((target - model.c) / model.a, -1.0 / model.b);
      return model.tier == 5 ? r / model.d : r;
    }
    default: throw std::invalid_argument("model tier must be in 1..5");
  }
}

Inversion invert(const RuntimeModel& model, double target, const LimitGrid& grid) {
  const auto raw = invert_unclamped(model, target);
  if (!raw) {
    return Inversion{grid.limit(grid.size() - 1), true};
  }
  const double clamped = std::clamp(*raw, grid.l_min(), grid.l_max());
  return Inversion{grid.snap(clamped), false};
}

void to_json(nlohmann::json& j, const RuntimeModel& m) {
  j = nlohmann::json{{"tier", m.tier}, {"a", m.a}, {"b", m.b}, {"c", m.c}, {"d", m.d}};
}

void from_json(const nlohmann::json& j, RuntimeModel& m) {
  m.tier = j.at("tier").get<int>();
  m.a = j.value("a", 1.0);
  m.b = j.value("b", 1.0);
  m.c = j.value("c", 0.0);
  m.d = j.value("d", 1.0);
  m.validate();
}

void to_json(nlohmann::json& j, const ProfilePoint& p) {
  j = nlohmann::json{{"cpu_limit", p.cpu_limit},
                     {"mean_runtime", p.mean_runtime},
                     {"n_samples", p.n_samples},
                     {"sample_variance", p.sample_variance},
                     {"ci_width", p.ci_width}};
}

void from_json(const nlohmann::json& j, ProfilePoint& p) {
  p.cpu_limit = j.at("cpu_limit").get<double>();
  p.mean_runtime = j.at("mean_runtime").get<double>();
  p.n_samples = j.at("n_samples").get<std::size_t>();
  p.sample_variance = j.value("sample_variance", 0.0);
  p.ci_width = j.value("ci_width", 0.0);
}

std::string describe(const RuntimeModel& m) {
  std::ostringstream out;
  out.precision(6);
  switch (m.tier) {
    case 1: out << "f(R) = R^-1"; break;
    case 2: out << "f(R) = " << m.a << " * R^-1"; break;
    case 3: out << "f(R) = " << m.a << " * R^-" << m.b; break;
    case 4: out << "f(R) = " << m.a << " * R^-" << m.b << " + " << m.c; break;
    default: out << "f(R) = " << m.a << " * (R * " << m.d << ")^-" << m.b << " + " << m.c; break;
  }
  out << "  [tier " << m.tier << "]";
  return out.str();
}

}  // namespace rtprof
