#include <doctest.h>

#include <vector>

#include "rtprof/grid.hpp"

using rtprof::LimitGrid;

TEST_CASE("grid construction and indexing") {
  const LimitGrid grid(0.1, 4.0, 0.1);
  CHECK(grid.size() == 40);
  CHECK(grid.limit(0) == 0.1);
  CHECK(grid.limit(2) == 0.3);
  CHECK(grid.limit(39) == 4.0);
  CHECK(grid.index_of(0.30000000000000004) == 2u);
  CHECK_FALSE(grid.index_of(0.25).has_value());
  CHECK_FALSE(grid.index_of(4.1).has_value());

  CHECK_THROWS_AS(LimitGrid(0.1, 4.05, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(LimitGrid(2.0, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(LimitGrid(0.05, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("snap rounds to the nearest grid point with ties up") {
  const LimitGrid grid(0.1, 4.0, 0.1);
  CHECK(grid.snap(2.05) == 2.1);
  CHECK(grid.snap(1.04) == 1.0);
  CHECK(grid.snap(0.25) == 0.3);
  CHECK(grid.snap(-3.0) == 0.1);
  CHECK(grid.snap(9.0) == 4.0);
}

TEST_CASE("nearest unprofiled prefers the smaller neighbour") {
  const LimitGrid grid(0.1, 1.0, 0.1);
  const std::vector<double> profiled{0.2, 0.5};
  CHECK(*grid.nearest_unprofiled(0.2, profiled) == 0.1);
  CHECK(*grid.nearest_unprofiled(0.5, profiled) == 0.4);
  CHECK(*grid.nearest_unprofiled(0.7, profiled) == 0.7);

  std::vector<double> all;
  for (std::size_t i = 0; i < grid.size(); ++i) all.push_back(grid.limit(i));
  CHECK_FALSE(grid.nearest_unprofiled(0.5, all).has_value());
  CHECK(grid.unprofiled_indices(profiled).size() == 8);
}
