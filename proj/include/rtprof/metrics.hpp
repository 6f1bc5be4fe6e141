#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace rtprof {

struct SmapeConfig {
  double epsilon = 1e-12;  // floor applied to predictions, seconds
};

/// Symmetric error as a single ratio of sums, sum|p - y| / sum(y + p), in [0, 1].
/// Predictions are clamped to at least `cfg.epsilon` first.
template <typename DerivedA, typename DerivedP>
double smape(const Eigen::DenseBase<DerivedA>& actual, const Eigen::DenseBase<DerivedP>& predicted,
             SmapeConfig cfg = {}) {
  if (actual.size() == 0) {
    throw std::invalid_argument("smape requires at least one value");
  }
  if (actual.size() != predicted.size()) {
    throw std::invalid_argument("smape requires equally long actual and predicted vectors");
  }
  if (!(cfg.epsilon > 0.0)) {
    throw std::invalid_argument("smape epsilon must be positive");
  }
  const auto y = actual.derived().array().template cast<double>().eval();
  if (!(y > 0.0).all() || !y.allFinite()) {
    throw std::invalid_argument("smape requires positive actual values");
  }
  const auto p = predicted.derived().array().template cast<double>().max(cfg.epsilon).eval();
  return (p - y).abs().sum() / (y + p).sum();
}

/// Rows are strategies, columns are comparison cells; NaN marks a missing entry.
/// A strategy wins a cell when its error is at most (1 + tolerance) times the cell minimum.
Eigen::VectorXi count_wins(const Eigen::MatrixXd& table, double tolerance);

}  // namespace rtprof
