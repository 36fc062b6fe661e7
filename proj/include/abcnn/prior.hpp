#pragma once

#include "abcnn/rng.hpp"
#include "abcnn/types.hpp"

#include <algorithm>
#include <cmath>

namespace abcnn {

// Exponential(rate) for the Ising inverse temperature, or the uniform prior
// over the MA(2) identifiability triangle
//   theta1 in [-2,2], theta2 in [-1,1], theta2 +- theta1 >= -1.
struct PriorSpec {
  enum class Kind { ExponentialRate, UniformTriangleMA2 };

  Kind kind = Kind::ExponentialRate;
  double rate = 1.0;  // ExponentialRate only

  static PriorSpec exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("PriorSpec: rate must be positive");
    return PriorSpec{Kind::ExponentialRate, rate};
  }
  static PriorSpec uniform_triangle_ma2() { return PriorSpec{Kind::UniformTriangleMA2, 0.0}; }

  int param_dim() const { return kind == Kind::ExponentialRate ? 1 : 2; }
};

inline bool in_ma2_triangle(double t1, double t2) {
  return t1 >= -2.0 && t1 <= 2.0 && t2 >= -1.0 && t2 <= 1.0 && t2 + t1 >= -1.0 && t2 - t1 >= -1.0;
}

inline ParamVec draw_prior(const PriorSpec& prior, RngStream& rng) {
  switch (prior.kind) {
    case PriorSpec::Kind::ExponentialRate: {
      ParamVec theta(1);
      theta[0] = rng.exponential(prior.rate);
      return theta;
    }
    case PriorSpec::Kind::UniformTriangleMA2: {
      // Map two uniforms onto the triangle with vertices (-2,1), (2,1), (0,-1)
      // via the square-root trick; draws are exactly uniform, no rejection.
      double u = rng.uniform01();
      double v = rng.uniform01();
      double s = std::sqrt(u);
      // Barycentric interpolation: (1-s) * A + s * ((1-v) * B + v * C).
      double t1 = (1.0 - s) * (-2.0) + s * ((1.0 - v) * 2.0 + v * 0.0);
      double t2 = (1.0 - s) * 1.0 + s * ((1.0 - v) * 1.0 + v * (-1.0));
      // Snap rounding residue onto the closed support.
      t1 = std::clamp(t1, -2.0, 2.0);
      t2 = std::clamp(t2, -1.0, 1.0);
      if (t2 + t1 < -1.0) t2 = -1.0 - t1;
      if (t2 - t1 < -1.0) t2 = t1 - 1.0;
      ParamVec theta(2);
      theta[0] = t1;
      theta[1] = t2;
      return theta;
    }
  }
  throw std::logic_error("draw_prior: unknown prior kind");
}

}  // namespace abcnn
