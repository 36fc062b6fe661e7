#include "abcnn/ising.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace abcnn {

namespace {

// Index table of (right, down, left, up) for each site of the m x m torus.
std::vector<int> torus_neighbors(int m) {
  const int n = m * m;
  std::vector<int> nbr(4 * static_cast<std::size_t>(n));
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      int i = r * m + c;
      nbr[4 * i + 0] = r * m + (c + 1) % m;
      nbr[4 * i + 1] = ((r + 1) % m) * m + c;
      nbr[4 * i + 2] = r * m + (c + m - 1) % m;
      nbr[4 * i + 3] = ((r + m - 1) % m) * m + c;
    }
  }
  return nbr;
}

int stat_of_bits(std::uint32_t bits, int m, const std::vector<int>& nbr) {
  const int n = m * m;
  int s = 0;
  for (int i = 0; i < n; ++i) {
    int xi = (bits >> i) & 1u ? 1 : -1;
    int xr = (bits >> nbr[4 * i + 0]) & 1u ? 1 : -1;
    int xd = (bits >> nbr[4 * i + 1]) & 1u ? 1 : -1;
    s += xi * (xr + xd);
  }
  return s;
}

double logsumexp(const std::vector<double>& v) {
  double mx = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

}  // namespace

DataVec ising_simulate(const IsingModel& model, const ParamVec& theta, RngStream& rng) {
  model.validate();
  if (theta.size() != 1) throw std::invalid_argument("ising_simulate: theta must be scalar");
  if (!(theta[0] >= 0.0) || !std::isfinite(theta[0]))
    throw std::invalid_argument("ising_simulate: theta must be finite and >= 0");

  const int m = model.m;
  const int n = m * m;
  const auto nbr = torus_neighbors(m);

  std::vector<std::int8_t> spin(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) spin[i] = (rng.next_u64() & 1u) ? 1 : -1;

  // Flip of site i changes S* by delta = -2 * x_i * (sum of 4 neighbors);
  // only k = x_i * sum in {2, 4} can reject, with probability 1 - e^(-2 theta k).
  const double accept[3] = {1.0, std::exp(-4.0 * theta[0]), std::exp(-8.0 * theta[0])};

  const int total_sweeps = model.burn_in + model.sweeps;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const int sum = spin[nbr[4 * i]] + spin[nbr[4 * i + 1]] + spin[nbr[4 * i + 2]] + spin[nbr[4 * i + 3]];
      const int k = spin[i] * sum;
      if (k <= 0 || rng.uniform01() < accept[k >> 1]) spin[i] = -spin[i];
    }
  }

  DataVec x(n);
  for (int i = 0; i < n; ++i) x[i] = static_cast<double>(spin[i]);
  return x;
}

double ising_sufficient_stat(const DataVec& x) {
  const auto n = x.size();
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (static_cast<Eigen::Index>(m) * m != n || m < 2)
    throw std::invalid_argument("ising_sufficient_stat: length must be m^2 with m >= 2");
  double s = 0.0;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      double xi = x[r * m + c];
      if (xi != 1.0 && xi != -1.0)
        throw std::invalid_argument("ising_sufficient_stat: entries must be +-1");
      s += xi * (x[r * m + (c + 1) % m] + x[((r + 1) % m) * m + c]);
    }
  }
  return s;
}

IsingEnumeration::IsingEnumeration(int m) : m_(m) {
  if (m < 2) throw std::invalid_argument("IsingEnumeration: m must be >= 2");
  if (m > 4)
    throw std::invalid_argument("IsingEnumeration: refusing m > 4 (2^(m^2) states is infeasible)");
  const int n = m * m;
  const auto nbr = torus_neighbors(m);
  const std::uint64_t n_states = 1ull << n;

  // S* lies in [-2m^2, 2m^2] on an even-step ladder; bucket by (s + 2m^2)/2.
  const int offset = 2 * m * m;
  std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(2 * offset + 1));
  for (std::uint64_t b = 0; b < n_states; ++b) {
    int s = stat_of_bits(static_cast<std::uint32_t>(b), m, nbr);
    buckets[static_cast<std::size_t>((s + offset) / 2)].push_back(static_cast<std::uint32_t>(b));
  }
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    if (buckets[k].empty()) continue;
    stat_values_.push_back(static_cast<double>(2 * static_cast<int>(k) - offset));
    log_counts_.push_back(std::log(static_cast<double>(buckets[k].size())));
    states_by_value_.push_back(std::move(buckets[k]));
  }
}

double IsingEnumeration::log_partition(double theta) const {
  std::vector<double> terms(stat_values_.size());
  for (std::size_t k = 0; k < terms.size(); ++k)
    terms[k] = log_counts_[k] + theta * stat_values_[k];
  return logsumexp(terms);
}

std::vector<double> IsingEnumeration::stat_pmf(double theta) const {
  const double logz = log_partition(theta);
  std::vector<double> pmf(stat_values_.size());
  for (std::size_t k = 0; k < pmf.size(); ++k)
    pmf[k] = std::exp(log_counts_[k] + theta * stat_values_[k] - logz);
  return pmf;
}

DataVec IsingEnumeration::sample_state(double theta, RngStream& rng) const {
  const auto pmf = stat_pmf(theta);
  double u = rng.uniform01();
  std::size_t k = 0;
  double cum = 0.0;
  for (; k + 1 < pmf.size(); ++k) {
    cum += pmf[k];
    if (u < cum) break;
  }
  const auto& states = states_by_value_[k];
  std::uint32_t bits = states[rng.uniform_index(states.size())];

  const int n = m_ * m_;
  DataVec x(n);
  for (int i = 0; i < n; ++i) x[i] = (bits >> i) & 1u ? 1.0 : -1.0;
  return x;
}

double IsingEnumeration::posterior_mean_given_stat(const PriorSpec& prior, double s,
                                                   const Vector& theta_grid) const {
  if (prior.kind != PriorSpec::Kind::ExponentialRate)
    throw std::invalid_argument("posterior_mean_given_stat: Ising uses the exponential prior");
  if (theta_grid.size() < 2)
    throw std::invalid_argument("posterior_mean_given_stat: theta_grid needs >= 2 points");

  const auto n = theta_grid.size();
  Vector logw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = theta_grid[i];
    if (t < 0.0) throw std::invalid_argument("posterior_mean_given_stat: grid must be in [0, inf)");
    logw[i] = std::log(prior.rate) - prior.rate * t + t * s - log_partition(t);
  }
  const double mx = logw.maxCoeff();

  // Trapezoid quadrature of theta * w and w over the (possibly nonuniform) grid.
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double h = theta_grid[i + 1] - theta_grid[i];
    double w0 = std::exp(logw[i] - mx), w1 = std::exp(logw[i + 1] - mx);
    den += 0.5 * h * (w0 + w1);
    num += 0.5 * h * (theta_grid[i] * w0 + theta_grid[i + 1] * w1);
  }
  return num / den;
}

double ising_exact_posterior_mean(const DataVec& x, const PriorSpec& prior, int m,
                                  const Vector& theta_grid) {
  IsingEnumeration enumeration(m);
  return enumeration.posterior_mean_given_stat(prior, ising_sufficient_stat(x), theta_grid);
}

Vector exponential_prior_grid(double rate, int points, double hi) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential_prior_grid: rate must be positive");
  if (points < 2) throw std::invalid_argument("exponential_prior_grid: need >= 2 points");
  if (hi <= 0.0) hi = 30.0 / rate;
  return Vector::LinSpaced(points, 0.0, hi);
}

}  // namespace abcnn
