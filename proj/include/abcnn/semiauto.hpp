#pragma once

#include "abcnn/types.hpp"

#include <string>

namespace abcnn {

// Candidate statistics for the linear-regression summary: either the raw
// data components, or elementwise powers (x, x^2, ..., x^d) concatenated.
struct CandidateBasis {
  enum class Kind { RawComponents, PolynomialPowers };
  Kind kind = Kind::RawComponents;
  int max_degree = 1;

  static CandidateBasis raw() { return {Kind::RawComponents, 1}; }
  static CandidateBasis poly(int max_degree) {
    if (max_degree < 1) throw std::invalid_argument("CandidateBasis: max_degree must be >= 1");
    return {Kind::PolynomialPowers, max_degree};
  }

  Eigen::Index expanded_dim(Eigen::Index p) const {
    return kind == Kind::RawComponents ? p : p * max_degree;
  }
  std::string tag() const {
    return kind == Kind::RawComponents ? "raw" : "poly" + std::to_string(max_degree);
  }
};

Vector expand_basis(const DataVec& x, const CandidateBasis& basis);
// Column-per-sample batch variant; X is p x N, result is K x N.
Matrix expand_basis_batch(const Matrix& X, const CandidateBasis& basis);

// theta_hat(x) = intercept + coefficients * expand_basis(x).
struct LinearSummary {
  ParamVec intercept;   // q
  Matrix coefficients;  // q x K
  CandidateBasis basis;

  Eigen::Index output_dim() const { return intercept.size(); }
  Vector predict(const DataVec& x) const { return intercept + coefficients * expand_basis(x, basis); }
  Matrix predict_batch(const Matrix& X) const {
    return (coefficients * expand_basis_batch(X, basis)).colwise() + intercept;
  }
};

// Ordinary least squares of theta on the expanded basis over the train
// split (normal equations on centered data). Rank deficiency falls back to
// ridge with lambda = 1e-8 * trace(Gram) and a warning on stderr.
LinearSummary fit_linear_summary(const Dataset& data, const CandidateBasis& basis);

// Same checkpoint container as MLP models, kind tag "linear-summary".
void save_linear_summary(const LinearSummary& s, const std::string& path, std::uint64_t seed = 0,
                         std::uint64_t train_hash = 0);
LinearSummary load_linear_summary(const std::string& path);

// Peeks at a checkpoint header and reports its kind tag ("mlp" or
// "linear-summary").
std::string checkpoint_kind(const std::string& path);

}  // namespace abcnn
