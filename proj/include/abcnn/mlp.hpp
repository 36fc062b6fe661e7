#pragma once

#include "abcnn/rng.hpp"
#include "abcnn/types.hpp"

#include <string>
#include <vector>

namespace abcnn {

// Dense feed-forward network: tanh on every hidden layer, identity output.
//   H^(1) = tanh(W^(0) X + b^(0)), ..., theta_hat = W^(L) H^(L) + b^(L).
struct MlpModel {
  std::vector<Eigen::Index> layer_sizes;  // [n0, n1, ..., nL, q], L >= 1
  std::vector<Matrix> weights;            // W[l] is layer_sizes[l+1] x layer_sizes[l]
  std::vector<Vector> biases;

  Eigen::Index input_dim() const { return layer_sizes.front(); }
  Eigen::Index output_dim() const { return layer_sizes.back(); }
  int hidden_count() const { return static_cast<int>(layer_sizes.size()) - 2; }
  Eigen::Index parameter_count() const;

  void validate() const;
  bool same_shape(const MlpModel& other) const;
};

// Fan-scaled uniform init: W^(l) ~ U[-a, a], a = sqrt(6/(n_in + n_out)),
// biases zero. Deterministic in seed.
MlpModel mlp_init(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed);

ParamVec mlp_forward(const MlpModel& model, const DataVec& x);
// Column-per-sample batch variant; X is n0 x B, result is q x B.
Matrix mlp_forward_batch(const MlpModel& model, const Matrix& X);

// J = (1/B) sum_i ||f(x_i) - t_i||^2 + lambda * sum_{l>=1} ||W^(l)||_F^2.
// The penalty skips the biases and the input weight matrix W^(0).
double mlp_loss(const MlpModel& model, const Matrix& X, const Matrix& T, double l2_lambda);

struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Exact gradient of mlp_loss by backpropagation; layout mirrors the model.
MlpGradient mlp_gradient(const MlpModel& model, const Matrix& X, const Matrix& T, double l2_lambda);
// Same backward pass but also reports the batch objective value.
double mlp_loss_and_gradient(const MlpModel& model, const Matrix& X, const Matrix& T,
                             double l2_lambda, MlpGradient& grad);

struct TrainConfig {
  int epochs = 200;
  int minibatch_size = 64;
  double learning_rate = 0.01;
  enum class LrSchedule { constant, step_decay } lr_schedule = LrSchedule::step_decay;
  int lr_step_epochs = 50;    // step_decay: multiply by lr_decay every this many epochs
  double lr_decay = 0.5;
  double l2_lambda = 0.0;
  // Stop after this many consecutive epochs whose validation loss fails to
  // improve on the best seen; >= epochs disables early stopping.
  int early_stopping_patience = 1000000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, objective averaged over minibatches
  std::vector<double> val_loss;    // per epoch, plain MSE on the validation split
  int stopped_epoch = 0;           // 1-based count of epochs actually run
  int best_epoch = 0;              // 1-based epoch whose parameters are returned
  double wall_time_seconds = 0.0;
  Vector train_rmse;               // per component, best parameters
  Vector test_rmse;                // empty when the dataset has no test split
};

// Shuffled minibatch SGD over the train split, validation tracked each epoch,
// parameters of the best-validation epoch returned. Deterministic in
// cfg.seed. Throws on non-finite loss, naming the epoch and learning rate.
std::pair<MlpModel, TrainReport> mlp_train(const MlpModel& init, const Dataset& data,
                                           const TrainConfig& cfg);

// Checkpoint: one-line JSON header (layer sizes, activation tag, lambda,
// seed, training-set hash) followed by the raw parameter bytes.
void save_model(const MlpModel& model, const std::string& path, double l2_lambda = 0.0,
                std::uint64_t seed = 0, std::uint64_t train_hash = 0);
MlpModel load_model(const std::string& path);

// Per-component RMSE of model predictions over the given pairs.
Vector mlp_rmse(const MlpModel& model, const Matrix& X, const Matrix& T);

}  // namespace abcnn
