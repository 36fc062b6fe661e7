#pragma once

#include "abcnn/rng.hpp"
#include "abcnn/types.hpp"

#include <optional>
#include <utility>

namespace abcnn {

// MA(2) process X_j = Z_j + theta1 Z_{j-1} + theta2 Z_{j-2} with Z iid N(0,1).
struct Ma2Model {
  int p = 100;

  void validate() const {
    if (p < 3) throw std::invalid_argument("Ma2Model: p must be >= 3");
  }
};

// Exact length-p draw; X_1 already uses Z_1, Z_0, Z_{-1} (no warm-up cut).
DataVec ma2_simulate(const Ma2Model& model, const ParamVec& theta, RngStream& rng);

// (AC1, AC2) = ((1/(p-1)) sum X_j X_{j+1}, (1/(p-2)) sum X_j X_{j+2}),
// the raw normalized sums without mean-centering.
std::pair<double, double> ma2_autocovariance(const DataVec& x);

// Exact log N(0, Sigma(theta)) density of x. Sigma is the banded Toeplitz
// covariance with diagonal 1 + theta1^2 + theta2^2, lag-1 band
// theta1 (1 + theta2), lag-2 band theta2; evaluated by a bandwidth-2
// Cholesky in O(p). Throws if theta leaves the closed triangle or the
// factorization meets a nonpositive pivot.
double ma2_loglikelihood(const DataVec& x, const ParamVec& theta);

// Posterior over the uniform-triangle prior evaluated on cell centers of a
// resolution x resolution grid over the bounding box [-2,2] x [-1,1],
// masked to the triangle and normalized to sum to one.
class Ma2PosteriorGrid {
 public:
  Ma2PosteriorGrid(const DataVec& x, int resolution);

  int resolution() const { return resolution_; }
  double log_normalizer() const { return log_normalizer_; }
  // (i, j) indexes (theta1_centers[i], theta2_centers[j]); -inf outside the triangle.
  const Matrix& log_posterior() const { return log_posterior_; }
  const Matrix& probabilities() const { return probabilities_; }
  const Vector& theta1_centers() const { return theta1_centers_; }
  const Vector& theta2_centers() const { return theta2_centers_; }

  double total_probability() const { return probabilities_.sum(); }
  Vector mean() const;                  // (E theta1, E theta2)
  Vector std() const;                   // component stds
  double correlation() const;           // cor(theta1, theta2)

 private:
  int resolution_;
  double log_normalizer_;
  Matrix log_posterior_;
  Matrix probabilities_;
  Vector theta1_centers_, theta2_centers_;
};

Ma2PosteriorGrid ma2_exact_posterior(const DataVec& x, int resolution);

}  // namespace abcnn
