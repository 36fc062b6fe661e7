#include "abcnn/ising.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace abcnn;

namespace {

// Independent route to S*: count disagreeing toroidal edges.
double stat_by_edge_count(const DataVec& x, int m) {
  int disagree = 0;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      if (x[r * m + c] != x[r * m + (c + 1) % m]) ++disagree;
      if (x[r * m + c] != x[((r + 1) % m) * m + c]) ++disagree;
    }
  }
  return 2.0 * m * m - 2.0 * disagree;
}

ParamVec scalar(double v) {
  ParamVec t(1);
  t[0] = v;
  return t;
}

}  // namespace

TEST_CASE("sufficient statistic on reference patterns") {
  const int m = 10;
  DataVec ones = DataVec::Ones(m * m);
  CHECK(ising_sufficient_stat(ones) == 200.0);

  DataVec flipped = ones;
  flipped[37] = -1.0;
  CHECK(ising_sufficient_stat(flipped) == 192.0);

  DataVec checker(m * m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) checker[r * m + c] = ((r + c) % 2 == 0) ? 1.0 : -1.0;
  CHECK(ising_sufficient_stat(checker) == -2.0 * m * m);

  DataVec bad = ones;
  bad[3] = 0.5;
  CHECK_THROWS_AS(ising_sufficient_stat(bad), std::invalid_argument);
  CHECK_THROWS_AS(ising_sufficient_stat(DataVec::Ones(7)), std::invalid_argument);
}

TEST_CASE("sufficient statistic equals 2m^2 minus twice the disagreeing edges") {
  const int m = 5;
  RngStream rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    DataVec x(m * m);
    for (int i = 0; i < m * m; ++i) x[i] = (rng.next_u64() & 1u) ? 1.0 : -1.0;
    CHECK(ising_sufficient_stat(x) == stat_by_edge_count(x, m));
  }
}

TEST_CASE("theta = 0 gives iid uniform spins") {
  const IsingModel model{5, 1, 20};
  const int n = 10000;
  double sum_stat = 0.0;
  double sum_spin = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(777, static_cast<std::uint64_t>(i));
    const DataVec x = ising_simulate(model, scalar(0.0), rng);
    sum_stat += ising_sufficient_stat(x);
    sum_spin += x.sum();
  }
  // Var(S*) = #edges = 2 m^2 at theta = 0.
  const double se_stat = std::sqrt(2.0 * 25 / n);
  CHECK(std::abs(sum_stat / n) < 3.0 * se_stat);
  const double se_spin = std::sqrt(25.0 / n);
  CHECK(std::abs(sum_spin / n) < 3.0 * se_spin);
}

TEST_CASE("simulation is deterministic given the stream") {
  const IsingModel model{4, 2, 50};
  RngStream a(5, 9), b(5, 9);
  const DataVec xa = ising_simulate(model, scalar(0.35), a);
  const DataVec xb = ising_simulate(model, scalar(0.35), b);
  CHECK(xa == xb);
}

TEST_CASE("theta = 0.8 concentrates S* near saturation on the 10x10 lattice") {
  const IsingModel model{10, 1, 1000};
  const int n = 400;
  int near_saturated = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(2024, static_cast<std::uint64_t>(i));
    const DataVec x = ising_simulate(model, scalar(0.8), rng);
    if (ising_sufficient_stat(x) >= 192.0) ++near_saturated;
  }
  CHECK(near_saturated >= static_cast<int>(0.8 * n));
}

TEST_CASE("enumeration matches brute-force counts on the 2x2 lattice") {
  const IsingEnumeration enumeration(2);
  // 2x2 torus: every edge doubled, S* = 2 sum over 4 distinct pairs.
  // States: all equal (2 states, S*=8); one spin off (8 states, S*=0);
  // two-by-two diagonal (2 states, S*=-8); adjacent pairs (4 states, S*=0).
  const auto& vals = enumeration.stat_values();
  REQUIRE(vals.size() == 3);
  CHECK(vals[0] == -8.0);
  CHECK(vals[1] == 0.0);
  CHECK(vals[2] == 8.0);
  CHECK(std::exp(enumeration.log_counts()[0]) == doctest::Approx(2.0));
  CHECK(std::exp(enumeration.log_counts()[1]) == doctest::Approx(12.0));
  CHECK(std::exp(enumeration.log_counts()[2]) == doctest::Approx(2.0));
  CHECK(std::exp(enumeration.log_partition(0.0)) == doctest::Approx(16.0));
}

TEST_CASE("enumeration refuses m > 4") {
  CHECK_THROWS_AS(IsingEnumeration(5), std::invalid_argument);
  CHECK_THROWS_AS(
      ising_exact_posterior_mean(DataVec::Ones(25), PriorSpec::exponential(0.4406), 5,
                                 exponential_prior_grid(0.4406, 101)),
      std::invalid_argument);
}

TEST_CASE("Metropolis S* distribution matches enumeration within TV 0.05 (m=3, short run)") {
  const int m = 3;
  const double theta = 0.3;
  const IsingEnumeration enumeration(m);
  const auto exact = enumeration.stat_pmf(theta);
  const auto& vals = enumeration.stat_values();

  const IsingModel model{m, 1, 200};
  const int n = 20000;
  std::map<double, int> counts;
  for (int i = 0; i < n; ++i) {
    RngStream rng(99, static_cast<std::uint64_t>(i));
    counts[ising_sufficient_stat(ising_simulate(model, scalar(theta), rng))]++;
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const auto it = counts.find(vals[k]);
    const double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    tv += std::abs(emp - exact[k]);
  }
  tv *= 0.5;
  CHECK(tv < 0.05);
  // No mass outside the achievable values.
  for (const auto& [s, c] : counts) {
    bool known = false;
    for (double v : vals) known = known || v == s;
    CHECK(known);
  }
}

TEST_CASE("exact sampler reproduces the tilted pmf") {
  const IsingEnumeration enumeration(3);
  const double theta = 0.45;
  const auto exact = enumeration.stat_pmf(theta);
  const auto& vals = enumeration.stat_values();
  RngStream rng(17, 0);
  const int n = 50000;
  std::map<double, int> counts;
  for (int i = 0; i < n; ++i)
    counts[ising_sufficient_stat(enumeration.sample_state(theta, rng))]++;
  double tv = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const auto it = counts.find(vals[k]);
    const double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    tv += std::abs(emp - exact[k]);
  }
  CHECK(0.5 * tv < 0.02);
}

TEST_CASE("posterior mean depends on x only through S* and exceeds the prior mean at saturation") {
  const auto prior = PriorSpec::exponential(0.4406);
  const Vector grid = exponential_prior_grid(0.4406, 2001);

  // Two distinct states with equal S*: one spin down at different sites.
  DataVec a = DataVec::Ones(9), b = DataVec::Ones(9);
  a[0] = -1.0;
  b[4] = -1.0;
  REQUIRE(ising_sufficient_stat(a) == ising_sufficient_stat(b));
  CHECK(ising_exact_posterior_mean(a, prior, 3, grid) ==
        ising_exact_posterior_mean(b, prior, 3, grid));

  const double mean_at_cap = ising_exact_posterior_mean(DataVec::Ones(9), prior, 3, grid);
  CHECK(mean_at_cap > 1.0 / 0.4406);
}

TEST_CASE("posterior mean is nondecreasing in S* across all achievable values") {
  const IsingEnumeration enumeration(3);
  const auto prior = PriorSpec::exponential(0.4406);
  const Vector grid = exponential_prior_grid(0.4406, 2001);
  double prev = -std::numeric_limits<double>::infinity();
  for (double s : enumeration.stat_values()) {
    const double mean = enumeration.posterior_mean_given_stat(prior, s, grid);
    CHECK(mean >= prev);
    prev = mean;
  }
}

TEST_CASE("simulate validates inputs") {
  const IsingModel model{3, 1, 10};
  RngStream rng(1, 1);
  CHECK_THROWS_AS(ising_simulate(model, scalar(-0.1), rng), std::invalid_argument);
  ParamVec two(2);
  two << 0.1, 0.2;
  CHECK_THROWS_AS(ising_simulate(model, two, rng), std::invalid_argument);
}
