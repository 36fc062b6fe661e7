#pragma once

#include "abcnn/prior.hpp"
#include "abcnn/rng.hpp"
#include "abcnn/types.hpp"

#include <cstdint>
#include <vector>

namespace abcnn {

// Ising model on an m x m toroidal lattice with inverse temperature
// theta >= 0. States are +-1 spins flattened row-major to length m^2.
struct IsingModel {
  int m = 10;
  int sweeps = 1;      // Metropolis sweeps kept per sample
  int burn_in = 1000;  // sweeps discarded before the sample

  void validate() const {
    if (m < 2) throw std::invalid_argument("IsingModel: m must be >= 2");
    if (sweeps < 1) throw std::invalid_argument("IsingModel: sweeps must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("IsingModel: burn_in must be >= 0");
  }
};

// One draw from p(X|theta) by single-spin-flip Metropolis: uniform random
// start, burn_in + sweeps full sweeps in site order, final state returned.
// Each call is a fresh chain, so distinct calls give independent samples.
DataVec ising_simulate(const IsingModel& model, const ParamVec& theta, RngStream& rng);

// Neighbor-product sum S*(X) = sum_{j~k} X_j X_k over the torus, each of the
// 2 m^2 (right, down) edges counted once. Range [-2m^2, 2m^2].
double ising_sufficient_stat(const DataVec& x);

// Exhaustive enumeration of the 2^(m^2) states for m <= 4: exact partition
// function, pmf of S*, exact sampling, and posterior-mean quadrature.
class IsingEnumeration {
 public:
  explicit IsingEnumeration(int m);

  int m() const { return m_; }
  // Achievable S* values, ascending, with log state multiplicities.
  const std::vector<double>& stat_values() const { return stat_values_; }
  const std::vector<double>& log_counts() const { return log_counts_; }

  double log_partition(double theta) const;
  // pmf of S*(X) under p(X|theta), aligned with stat_values().
  std::vector<double> stat_pmf(double theta) const;
  // Exact draw from p(X|theta) (inverse-CDF over the tilted enumeration).
  DataVec sample_state(double theta, RngStream& rng) const;

  // E[theta | S*(X) = s] under the prior, by quadrature on theta_grid.
  double posterior_mean_given_stat(const PriorSpec& prior, double s, const Vector& theta_grid) const;

 private:
  int m_ = 0;
  std::vector<double> stat_values_;
  std::vector<double> log_counts_;
  std::vector<std::vector<std::uint32_t>> states_by_value_;
};

// E_pi[theta | X = x] for desk-scale lattices; depends on x only through
// S*(x). Throws when m > 4 (enumeration infeasible).
double ising_exact_posterior_mean(const DataVec& x, const PriorSpec& prior, int m, const Vector& theta_grid);

// Uniform grid on [0, hi] suited to an Exp(rate) prior; hi defaults to
// 30/rate, far past any posterior mass the quadrature can see.
Vector exponential_prior_grid(double rate, int points = 3001, double hi = 0.0);

}  // namespace abcnn
