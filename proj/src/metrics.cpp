#include "rtprof/metrics.hpp"

#include <limits>

namespace rtprof {

Eigen::VectorXi count_wins(const Eigen::MatrixXd& table, double tolerance) {
  if (table.rows() == 0 || table.cols() == 0) {
    throw std::invalid_argument("count_wins requires a non-empty table");
  }
  if (!(tolerance >= 0.0)) {
    throw std::invalid_argument("count_wins tolerance must be non-negative");
  }
  Eigen::VectorXi wins = Eigen::VectorXi::Zero(table.rows());
  for (Eigen::Index cell = 0; cell < table.cols(); ++cell) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < table.rows(); ++s) {
      if (!std::isnan(table(s, cell))) best = std::min(best, table(s, cell));
    }
    if (!std::isfinite(best)) {
      continue;
    }
    const double threshold = (1.0 + tolerance) * best;
    for (Eigen::Index s = 0; s < table.rows(); ++s) {
      if (!std::isnan(table(s, cell)) && table(s, cell) <= threshold) ++wins[s];
    }
  }
  return wins;
}

}  // namespace rtprof
