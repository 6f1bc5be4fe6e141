#include "rtprof/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rtprof {

namespace {
constexpr double kGridTolerance = 1e-9;
}

double canonical_limit(double value) { return std::round(value * 1e12) / 1e12; }

LimitGrid::LimitGrid(double l_min, double l_max, double delta)
    : l_min_(l_min), l_max_(l_max), delta_(delta), size_(0) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("grid delta must be positive, got " + std::to_string(delta));
  }
  if (!(l_min > 0.0) || !(l_min < l_max) || !std::isfinite(l_max)) {
    throw std::invalid_argument("grid requires 0 < l_min < l_max");
  }
  if (l_min < delta - kGridTolerance) {
    throw std::invalid_argument("grid requires l_min >= delta");
  }
  const double steps = (l_max - l_min) / delta;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) * delta > kGridTolerance) {
    throw std::invalid_argument("grid span l_max - l_min must be a multiple of delta");
  }
  size_ = static_cast<std::size_t>(rounded) + 1;
}

double LimitGrid::limit(std::size_t index) const {
  if (index >= size_) {
    throw std::out_of_range("grid index out of range");
  }
  if (index + 1 == size_) {
    return canonical_limit(l_max_);
  }
  return canonical_limit(l_min_ + static_cast<double>(index) * delta_);
}

Eigen::ArrayXd LimitGrid::limits() const {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(size_));
  for (std::size_t i = 0; i < size_; ++i) {
    out[static_cast<Eigen::Index>(i)] = limit(i);
  }
  return out;
}

std::optional<std::size_t> LimitGrid::index_of(double value) const {
  if (!std::isfinite(value)) {
    return std::nullopt;
  }
  const double pos = std::round((value - l_min_) / delta_);
  if (pos < 0.0 || pos > static_cast<double>(size_ - 1)) {
    return std::nullopt;
  }
  const auto index = static_cast<std::size_t>(pos);
  if (std::abs(limit(index) - value) > kGridTolerance) {
    return std::nullopt;
  }
  return index;
}

std::size_t LimitGrid::snap_index(double value) const {
  const double pos = std::floor((value - l_min_) / delta_ + 0.5 + kGridTolerance);
  if (!(pos > 0.0)) {
    return 0;
  }
  return std::min(static_cast<std::size_t>(pos), size_ - 1);
}

std::vector<std::size_t> LimitGrid::unprofiled_indices(std::span<const double> profiled) const {
  std::vector<bool> taken(size_, false);
  for (double p : profiled) {
    if (auto idx = index_of(p)) {
      taken[*idx] = true;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size_; ++i) {
    if (!taken[i]) {
      out.push_back(i);
    }
  }
  return out;
}

std::optional<double> LimitGrid::nearest_unprofiled(double value,
                                                    std::span<const double> profiled) const {
  const auto free = unprofiled_indices(profiled);
  if (free.empty()) {
    return std::nullopt;
  }
  const auto start = static_cast<long>(snap_index(value));
  std::optional<std::size_t> best;
  long best_distance = 0;
  // `free` is ascending, so the first minimum found is the smaller limit.
  for (std::size_t idx : free) {
    const long distance = std::labs(static_cast<long>(idx) - start);
    if (!best || distance < best_distance) {
      best = idx;
      best_distance = distance;
    }
  }
  return limit(*best);
}

bool operator==(const LimitGrid& lhs, const LimitGrid& rhs) {
  return lhs.size_ == rhs.size_ && std::abs(lhs.l_min_ - rhs.l_min_) <= kGridTolerance &&
         std::abs(lhs.l_max_ - rhs.l_max_) <= kGridTolerance &&
         std::abs(lhs.delta_ - rhs.delta_) <= kGridTolerance;
}

}  // namespace rtprof
