#pragma once

#include "abcnn/abc.hpp"
#include "abcnn/config.hpp"
#include "abcnn/metrics.hpp"
#include "abcnn/types.hpp"

#include <optional>
#include <string>

namespace abcnn {

// Raised when FixedEpsilon rejection accepts nothing; the CLI maps it to exit 4.
struct empty_acceptance_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Draws the full labeled dataset (train | validation | test) for the
// configured model. Pair i uses RngStream(cfg.seed, i), so the result is
// independent of the worker count.
Dataset generate_experiment_dataset(const ExperimentConfig& cfg, int n_threads = 0);

// Single (theta_obs, x_obs) pair drawn with cfg.obs_theta and cfg.obs_seed.
Dataset simulate_observation(const ExperimentConfig& cfg);

Simulator make_simulator(const ExperimentConfig& cfg);

struct TrainOutcome {
  std::string method_label;  // table row label, e.g. "DNN, λ=0.001"
  Vector train_rmse;
  Vector test_rmse;
  double seconds = 0.0;
  std::optional<MlpModel> mlp;
  std::optional<LinearSummary> linear;
  TrainReport report;  // MLP methods only

  SummaryStatistic summary() const;
};

// Trains per cfg.nn_method: "dnn"/"ffnn" run SGD, "semiauto" fits the
// linear-regression summary on the same train split.
TrainOutcome run_training(const ExperimentConfig& cfg, const Dataset& data);

void save_training_outcome(const TrainOutcome& outcome, const std::string& checkpoint_path,
                           const ExperimentConfig& cfg, std::uint64_t train_hash);
// Loads a checkpoint written by save_training_outcome, either kind.
SummaryStatistic load_summary_checkpoint(const std::string& path);
// Resolves --summary arguments: a checkpoint path or one of the built-in
// names "ising-sufficient", "ma2-autocov", "identity".
SummaryStatistic resolve_summary(const std::string& name, const ExperimentConfig& cfg);

// Rejection sampling configured from cfg (mode, tolerance, distance; the
// "auto" distance standardizes multi-component summaries). Throws
// empty_acceptance_error when FixedEpsilon accepts nothing.
AbcResult run_abc(const ExperimentConfig& cfg, const SummaryStatistic& summary,
                  const DataVec& x_obs);

}  // namespace abcnn
