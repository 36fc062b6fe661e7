#include "abcnn/ma2.hpp"

#include "abcnn/prior.hpp"

#include <cmath>

namespace abcnn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_theta(const ParamVec& theta) {
  if (theta.size() != 2) throw std::invalid_argument("ma2: theta must have two components");
  if (!theta.allFinite()) throw std::invalid_argument("ma2: theta must be finite");
}

}  // namespace

DataVec ma2_simulate(const Ma2Model& model, const ParamVec& theta, RngStream& rng) {
  model.validate();
  check_theta(theta);
  const int p = model.p;
  // z[k] holds Z_{k-2}, k = 0..p+1, so X_j = z[j+1] + t1 z[j] + t2 z[j-1].
  Vector z(p + 2);
  for (int k = 0; k < p + 2; ++k) z[k] = rng.normal();
  DataVec x(p);
  const double t1 = theta[0], t2 = theta[1];
  for (int j = 0; j < p; ++j) x[j] = z[j + 2] + t1 * z[j + 1] + t2 * z[j];
  return x;
}

std::pair<double, double> ma2_autocovariance(const DataVec& x) {
  const auto p = x.size();
  if (p < 3) throw std::invalid_argument("ma2_autocovariance: series must have p >= 3");
  const double ac1 = x.head(p - 1).dot(x.tail(p - 1)) / static_cast<double>(p - 1);
  const double ac2 = x.head(p - 2).dot(x.tail(p - 2)) / static_cast<double>(p - 2);
  return {ac1, ac2};
}

double ma2_loglikelihood(const DataVec& x, const ParamVec& theta) {
  check_theta(theta);
  if (!in_ma2_triangle(theta[0], theta[1]))
    throw std::invalid_argument("ma2_loglikelihood: theta outside the identifiability triangle");
  const auto p = x.size();
  if (p < 1) throw std::invalid_argument("ma2_loglikelihood: empty series");

  const double t1 = theta[0], t2 = theta[1];
  const double g0 = 1.0 + t1 * t1 + t2 * t2;
  const double g1 = t1 * (1.0 + t2);
  const double g2 = t2;

  // Banded Cholesky (bandwidth 2) of the Toeplitz covariance, fused with the
  // forward solve L y = x and the log-determinant accumulation.
  Vector d(p), l1(p), l2(p), y(p);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double a2 = i >= 2 ? g2 / d[i - 2] : 0.0;
    const double a1 = i >= 1 ? (g1 - (i >= 2 ? a2 * l1[i - 1] * d[i - 2] : 0.0)) / d[i - 1] : 0.0;
    // Here a1, a2 are the unit-lower-triangular multipliers of an LDL^T
    // factorization; dd is the diagonal pivot.
    const double dd = g0 - (i >= 1 ? a1 * a1 * d[i - 1] : 0.0) - (i >= 2 ? a2 * a2 * d[i - 2] : 0.0);
    if (!(dd > 0.0) || !std::isfinite(dd))
      throw std::runtime_error("ma2_loglikelihood: covariance not positive definite at this theta");
    d[i] = dd;
    l1[i] = a1;
    l2[i] = a2;
    y[i] = x[i] - (i >= 1 ? a1 * y[i - 1] : 0.0) - (i >= 2 ? a2 * y[i - 2] : 0.0);
    logdet += std::log(dd);
  }
  double quad = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) quad += y[i] * y[i] / d[i];
  return -0.5 * (static_cast<double>(p) * kLog2Pi + logdet + quad);
}

Ma2PosteriorGrid::Ma2PosteriorGrid(const DataVec& x, int resolution) : resolution_(resolution) {
  if (resolution < 50) throw std::invalid_argument("Ma2PosteriorGrid: resolution must be >= 50");
  const int r = resolution;
  theta1_centers_.resize(r);
  theta2_centers_.resize(r);
  for (int i = 0; i < r; ++i) {
    theta1_centers_[i] = -2.0 + (i + 0.5) * 4.0 / r;
    theta2_centers_[i] = -1.0 + (i + 0.5) * 2.0 / r;
  }

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  log_posterior_ = Matrix::Constant(r, r, kNegInf);
  double mx = kNegInf;
  ParamVec theta(2);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      if (!in_ma2_triangle(theta1_centers_[i], theta2_centers_[j])) continue;
      theta[0] = theta1_centers_[i];
      theta[1] = theta2_centers_[j];
      const double ll = ma2_loglikelihood(x, theta);
      log_posterior_(i, j) = ll;
      mx = std::max(mx, ll);
    }
  }

  double sum = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (std::isfinite(log_posterior_(i, j))) sum += std::exp(log_posterior_(i, j) - mx);
  log_normalizer_ = mx + std::log(sum);

  probabilities_ = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (std::isfinite(log_posterior_(i, j)))
        probabilities_(i, j) = std::exp(log_posterior_(i, j) - log_normalizer_);
}

Vector Ma2PosteriorGrid::mean() const {
  Vector m = Vector::Zero(2);
  m[0] = (probabilities_.rowwise().sum().array() * theta1_centers_.array()).sum();
  m[1] = (probabilities_.colwise().sum().transpose().array() * theta2_centers_.array()).sum();
  return m;
}

Vector Ma2PosteriorGrid::std() const {
  const Vector m = mean();
  const Vector p1 = probabilities_.rowwise().sum();
  const Vector p2 = probabilities_.colwise().sum().transpose();
  const double v1 = (p1.array() * (theta1_centers_.array() - m[0]).square()).sum();
  const double v2 = (p2.array() * (theta2_centers_.array() - m[1]).square()).sum();
  Vector s(2);
  s[0] = std::sqrt(std::max(0.0, v1));
  s[1] = std::sqrt(std::max(0.0, v2));
  return s;
}

double Ma2PosteriorGrid::correlation() const {
  const Vector m = mean();
  const Vector s = std();
  double cov = 0.0;
  for (int i = 0; i < resolution_; ++i)
    for (int j = 0; j < resolution_; ++j)
      if (probabilities_(i, j) > 0.0)
        cov += probabilities_(i, j) * (theta1_centers_[i] - m[0]) * (theta2_centers_[j] - m[1]);
  return cov / (s[0] * s[1]);
}

Ma2PosteriorGrid ma2_exact_posterior(const DataVec& x, int resolution) {
  return Ma2PosteriorGrid(x, resolution);
}

}  // namespace abcnn
