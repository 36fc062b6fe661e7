#pragma once

#include "abcnn/abc.hpp"
#include "abcnn/mlp.hpp"
#include "abcnn/prior.hpp"
#include "abcnn/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace abcnn {

// Raised for malformed configs, flags and inputs; the CLI maps it to exit 2.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One declarative experiment: `key = value` lines, '#' comments, later keys
// override earlier ones. Defaults reproduce the reference experiments
// (Ising 10x10 with Exp(0.4406) prior; MA(2) p=100 on the uniform triangle;
// 10^6/10^5/10^5 splits) and `scale` shrinks the three dataset sizes.
struct ExperimentConfig {
  std::string model;  // "ising" | "ma2"
  std::uint64_t seed = 20240601;
  double scale = 1.0;

  int ising_m = 10;
  int ising_burn_in = 1000;
  int ising_sweeps = 1;
  double prior_rate = 0.4406;

  int ma2_p = 100;

  std::int64_t n_train = 1000000;
  std::int64_t n_val = 100000;
  std::int64_t n_test = 100000;

  std::vector<double> obs_theta;  // empty: no x_obs output from `simulate`
  std::uint64_t obs_seed = 424242;

  std::string nn_method = "dnn";  // dnn | ffnn | semiauto
  int nn_hidden_layers = 3;       // dnn default; ffnn forces 1
  int nn_hidden_units = 100;
  int nn_epochs = 200;
  int nn_minibatch = 64;
  double nn_learning_rate = 0.01;
  std::string nn_lr_schedule = "step-decay";  // constant | step-decay
  int nn_lr_step = 50;
  double nn_lr_decay = 0.5;
  double nn_l2_lambda = 0.0;
  int nn_patience = 0;  // 0: disabled (runs all epochs, returns best-val params)
  std::string semiauto_basis;  // raw | polyK; empty = model default (ising raw, ma2 poly4)

  std::int64_t abc_n_proposals = 0;  // 0 = model default (ising 10^6, ma2 10^5)
  std::string abc_mode = "quantile";  // quantile | epsilon
  double abc_quantile = 0.001;
  double abc_epsilon = 0.1;
  std::string abc_distance = "auto";  // auto | euclidean | standardized

  int oracle_resolution = 200;
  int oracle_grid_points = 3001;
  double oracle_grid_max = 0.0;  // 0 = 30 / prior_rate

  // Effective sizes after `scale`.
  std::int64_t scaled_n_train() const;
  std::int64_t scaled_n_val() const;
  std::int64_t scaled_n_test() const;
  std::int64_t effective_abc_proposals() const;
  std::string effective_semiauto_basis() const;

  PriorSpec prior() const;
  IsingModel ising_model() const;
  Ma2Model ma2_model() const;
  Eigen::Index data_dim() const;
  Eigen::Index param_dim() const;

  TrainConfig train_config() const;
  std::vector<Eigen::Index> layer_sizes() const;

  void validate() const;
  // Canonical `key = value` rendering of the resolved config; config_hash is
  // the FNV-1a of this text and stamps every output file.
  std::string canonical() const;
  std::uint64_t config_hash() const;
  std::string stamp() const;  // "config_hash=... seed=..."
};

// Parses a config file and/or `key=value` override strings (applied in order).
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);
ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides);

// First '# ...' comment line of a CSV/JSON output, used for hash checks.
std::string read_stamp(const std::string& path);

}  // namespace abcnn
