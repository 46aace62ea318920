#include <doctest.h>

#include <cmath>
#include <vector>

#include "mvsde/measure.hpp"
#include "mvsde/rng.hpp"

using namespace mvsde;

TEST_CASE("moments of a small ensemble") {
  const std::vector<double> xs{0.0, 2.0};
  const auto mu = MeasureView::from_states(xs, 1);
  CHECK(mu.size() == 2);
  CHECK(mu.mean()[0] == 1.0);
  CHECK(mu.raw_moment(1, 0) == 1.0);
  CHECK(mu.raw_moment(2, 0) == 2.0);
  CHECK(mu.raw_moment(3, 0) == 4.0);
  CHECK(mu.raw_moment(5, 0) == 16.0);
  CHECK(mu.w2sq_to_dirac0() == 2.0);
  CHECK(mu.finite());
}

TEST_CASE("dirac measure") {
  const double p[2] = {2.0, -1.0};
  const auto mu = MeasureView::dirac(p);
  CHECK(mu.size() == 1);
  CHECK(mu.dim() == 2);
  CHECK(mu.raw_moment(3, 0) == 8.0);
  CHECK(mu.raw_moment(3, 1) == -1.0);
  CHECK(mu.w2sq_to_dirac0() == 5.0);
}

TEST_CASE("w2 to the origin matches the mean squared norm") {
  for (std::uint32_t trial = 0; trial < 100; ++trial) {
    rng::RngStream s(77, rng::StreamTag::Sampling, trial);
    const std::size_t d = 1 + trial % 3;
    const std::size_t n = 1 + trial % 17;
    std::vector<double> xs(n * d);
    for (double& x : xs) x = 5.0 * s.normal();
    const auto mu = MeasureView::from_states(xs, d);
    double direct = 0.0;
    for (double x : xs) direct += x * x;
    direct /= static_cast<double>(n);
    double by_coord = 0.0;
    for (std::size_t j = 0; j < d; ++j) by_coord += mu.raw_moment(2, j);
    CHECK(std::abs(mu.w2sq_to_dirac0() - direct) <= 1e-12 * direct);
    CHECK(std::abs(mu.w2sq_to_dirac0() - by_coord) <= 1e-12 * direct);
    for (std::size_t j = 0; j < d; ++j) CHECK(mu.mean()[j] == mu.raw_moment(1, j));
  }
}

TEST_CASE("non-finite states are visible") {
  const std::vector<double> xs{1.0, NAN};
  CHECK_FALSE(MeasureView::from_states(xs, 1).finite());
}
