#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rtprof {

/// The discrete set of CPU limitations {l_min, l_min + delta, ..., l_max}, in vCPU.
///
/// Grid points are addressed by index; limit(i) returns a canonical double so that
/// limits computed through different arithmetic paths compare equal.
class LimitGrid {
 public:
  LimitGrid(double l_min, double l_max, double delta = 0.1);

  double l_min() const { return l_min_; }
  double l_max() const { return l_max_; }
  double delta() const { return delta_; }
  std::size_t size() const { return size_; }

  double limit(std::size_t index) const;
  Eigen::ArrayXd limits() const;

  // Index of an on-grid limit (within 1e-9), std::nullopt otherwise.
  std::optional<std::size_t> index_of(double limit) const;
  bool contains(double limit) const { return index_of(limit).has_value(); }

  // Nearest grid index, ties round up, clamped into the grid.
  std::size_t snap_index(double value) const;
  double snap(double value) const { return limit(snap_index(value)); }

  // Nearest grid limit to `value` (after snapping) that is not in `profiled`.
  // Equidistant candidates resolve to the smaller limit. std::nullopt when every
  // grid limit has been profiled.
  std::optional<double> nearest_unprofiled(double value, std::span<const double> profiled) const;

  // Indices of grid limits not present in `profiled`, ascending.
  std::vector<std::size_t> unprofiled_indices(std::span<const double> profiled) const;

  friend bool operator==(const LimitGrid&, const LimitGrid&);

 private:
  double l_min_;
  double l_max_;
  double delta_;
  std::size_t size_;
};

// Rounds to 12 decimals so that e.g. 0.1 + 2 * 0.1 is stored as 0.3.
double canonical_limit(double value);

}  // namespace rtprof
