#pragma once

#include "abcnn/ising.hpp"
#include "abcnn/ma2.hpp"
#include "abcnn/mlp.hpp"
#include "abcnn/prior.hpp"
#include "abcnn/semiauto.hpp"
#include "abcnn/types.hpp"

#include <functional>
#include <string>

namespace abcnn {

// Low-dimensional statistic S(X) used inside the acceptance rule.
struct SummaryStatistic {
  enum class Source { DnnModel, LinearSummary, IsingSufficient, Ma2Autocov, Identity };

  Source source = Source::Identity;
  Eigen::Index dim = 0;
  std::function<Vector(const DataVec&)> eval;
  // Column-per-sample batch evaluation (defaults to a loop over eval).
  std::function<Matrix(const Matrix&)> eval_batch;

  static SummaryStatistic from_mlp(const MlpModel& model);
  static SummaryStatistic from_linear(const LinearSummary& summary);
  static SummaryStatistic ising_sufficient();
  static SummaryStatistic ma2_autocov();
  static SummaryStatistic identity(Eigen::Index p);
  // Arbitrary mapping under a chosen tag (tests use this for oracle summaries).
  static SummaryStatistic custom(Source source, Eigen::Index dim,
                                 std::function<Vector(const DataVec&)> fn);
};

const char* summary_source_name(SummaryStatistic::Source s);

// Forward model wrapper handed to the rejection samplers.
struct Simulator {
  std::string tag;       // "ising" or "ma2"
  bool discrete = false; // exact-match rejection is only meaningful when true
  Eigen::Index param_dim = 0;
  Eigen::Index data_dim = 0;
  std::function<DataVec(const ParamVec&, RngStream&)> draw;
};

Simulator make_ising_simulator(const IsingModel& model);
// Exact sampler from the enumerated law; the enumeration must outlive it.
Simulator make_ising_exact_simulator(const IsingEnumeration& enumeration);
Simulator make_ma2_simulator(const Ma2Model& model);

enum class DistanceMode { Euclidean, StandardizedEuclidean };

// ||a - b||_2, optionally with per-component standardization scales.
double summary_distance(const Vector& a, const Vector& b, DistanceMode mode,
                        const Vector* scale = nullptr);

struct AbcConfig {
  std::int64_t n_proposals = 1000000;
  enum class Mode { FixedEpsilon, Quantile } mode = Mode::Quantile;
  double epsilon = 0.0;     // FixedEpsilon threshold
  double quantile = 0.001;  // Quantile acceptance fraction in (0, 1]
  DistanceMode distance = DistanceMode::Euclidean;
  std::uint64_t seed = 0;
  int n_threads = 0;  // 0 = default

  void validate() const;
};

struct AbcResult {
  Matrix accepted;   // q x n_accepted, in proposal order
  Vector distances;  // per accepted draw
  double realized_epsilon = 0.0;
  std::int64_t n_proposed = 0;
  std::int64_t n_accepted = 0;
  DistanceMode distance_mode = DistanceMode::Euclidean;
  Vector distance_scale;  // standardization scales, empty for plain Euclidean
  std::uint64_t seed = 0;

  Vector accepted_mean() const {
    if (n_accepted == 0) throw std::runtime_error("AbcResult: no accepted draws");
    return accepted.rowwise().mean();
  }
};

// Algorithm with the exact acceptance criterion X' == x_obs; discrete
// simulators only. Aborts once the proposal budget is exhausted.
AbcResult abc_reject_exact(const PriorSpec& prior, const Simulator& sim, const DataVec& x_obs,
                           std::int64_t n, std::uint64_t seed,
                           std::int64_t proposal_budget = 100000000);

// Relaxed acceptance ||S(X') - S(x_obs)|| < eps. FixedEpsilon filters the
// proposal pool against cfg.epsilon (eps = 0 degenerates to an exact summary
// match); Quantile accepts exactly ceil(quantile * n_proposals) draws, ties
// broken by proposal index. Per-proposal RNG streams are keyed on the
// proposal index, so results do not depend on the thread count.
AbcResult abc_reject_summary(const PriorSpec& prior, const Simulator& sim,
                             const SummaryStatistic& summary, const DataVec& x_obs,
                             const AbcConfig& cfg);

// One accepted draw per row; sidecar JSON carries tolerances, counts and seeds.
void save_abc_result_csv(const AbcResult& result, const std::string& path,
                         const std::string& config_stamp);
void save_abc_result_sidecar(const AbcResult& result, const std::string& path,
                             const std::string& config_stamp, double wall_time_seconds);
// Reads back the draws written by save_abc_result_csv (q x n).
Matrix load_draws_csv(const std::string& path, std::string* config_stamp = nullptr);

}  // namespace abcnn
