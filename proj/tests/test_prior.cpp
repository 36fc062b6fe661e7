#include "abcnn/prior.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace abcnn;

TEST_CASE("exponential prior matches the analytic mean at the Ising rate") {
  const double rate = 0.4406;
  const auto prior = PriorSpec::exponential(rate);
  RngStream rng(11, 0);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const ParamVec t = draw_prior(prior, rng);
    REQUIRE(t.size() == 1);
    REQUIRE(t[0] >= 0.0);
    sum += t[0];
    sumsq += t[0] * t[0];
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(1.0 / rate).epsilon(0.03 * rate));  // 2.2696 +- 0.03
  CHECK(std::abs(mean - 2.2696) < 0.03);
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(var - 1.0 / (rate * rate)) < 0.05 / (rate * rate));
}

TEST_CASE("triangle prior support and centroid") {
  const auto prior = PriorSpec::uniform_triangle_ma2();
  RngStream rng(5, 2);
  const int n = 1000000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const ParamVec t = draw_prior(prior, rng);
    REQUIRE(t.size() == 2);
    REQUIRE(t[0] >= -2.0);
    REQUIRE(t[0] <= 2.0);
    REQUIRE(t[1] >= -1.0);
    REQUIRE(t[1] <= 1.0);
    REQUIRE(t[1] + t[0] >= -1.0);
    REQUIRE(t[1] - t[0] >= -1.0);
    s1 += t[0];
    s2 += t[1];
  }
  // Centroid of the vertices (-2,1), (2,1), (0,-1) is (0, 1/3).
  CHECK(std::abs(s1 / n - 0.0) < 0.01);
  CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.01);
}

TEST_CASE("prior sampling is deterministic given (seed, stream_id)") {
  const auto prior = PriorSpec::uniform_triangle_ma2();
  RngStream a(77, 13), b(77, 13);
  for (int i = 0; i < 200; ++i) {
    const ParamVec ta = draw_prior(prior, a), tb = draw_prior(prior, b);
    CHECK(ta[0] == tb[0]);
    CHECK(ta[1] == tb[1]);
  }
}

TEST_CASE("triangle draws pass a chi-square uniformity check on a 4x4 grid") {
  // Cell probabilities from the row-width integral: width(t2) = 2 (1 + t2),
  // area 4; integrate the overlap of each cell with |t1| <= 1 + t2.
  const int grid = 4;
  std::array<std::array<double, 4>, 4> expected{};
  const int quad = 2000;
  for (int j = 0; j < grid; ++j) {
    const double c0 = -1.0 + 2.0 * j / grid, c1 = -1.0 + 2.0 * (j + 1) / grid;
    for (int i = 0; i < grid; ++i) {
      const double a0 = -2.0 + 4.0 * i / grid, a1 = -2.0 + 4.0 * (i + 1) / grid;
      double area = 0.0;
      for (int k = 0; k < quad; ++k) {
        const double t2 = c0 + (k + 0.5) * (c1 - c0) / quad;
        const double lo = std::max(a0, -(1.0 + t2));
        const double hi = std::min(a1, 1.0 + t2);
        if (hi > lo) area += (hi - lo) * (c1 - c0) / quad;
      }
      expected[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = area / 4.0;
    }
  }

  const auto prior = PriorSpec::uniform_triangle_ma2();
  RngStream rng(31337, 4);
  const int n = 100000;
  std::array<std::array<int, 4>, 4> counts{};
  for (int k = 0; k < n; ++k) {
    const ParamVec t = draw_prior(prior, rng);
    int i = std::min(grid - 1, static_cast<int>((t[0] + 2.0) / 4.0 * grid));
    int j = std::min(grid - 1, static_cast<int>((t[1] + 1.0) / 2.0 * grid));
    ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  double chi2 = 0.0;
  int df = -1;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double e = expected[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * n;
      const int o = counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (e < 1e-9) {
        CHECK(o == 0);  // cells outside the support must stay empty
        continue;
      }
      chi2 += (o - e) * (o - e) / e;
      ++df;
    }
  }
  REQUIRE(df == 11);      // 12 cells intersect the triangle
  CHECK(chi2 < 31.2641);  // chi-square 0.999 quantile at 11 dof
}
