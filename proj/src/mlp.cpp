#include "abcnn/mlp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace abcnn {

Eigen::Index MlpModel::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

void MlpModel::validate() const {
  if (layer_sizes.size() < 3)
    throw std::invalid_argument("MlpModel: at least one hidden layer is required");
  for (auto s : layer_sizes)
    if (s < 1) throw std::invalid_argument("MlpModel: layer sizes must be positive");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
    throw std::invalid_argument("MlpModel: parameter count does not match layer_sizes");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1])
      throw std::invalid_argument("MlpModel: parameter shape mismatch at layer " + std::to_string(l));
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw std::invalid_argument("MlpModel: parameters must be finite");
  }
}

bool MlpModel::same_shape(const MlpModel& other) const { return layer_sizes == other.layer_sizes; }

MlpModel mlp_init(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed) {
  MlpModel model;
  model.layer_sizes = layer_sizes;
  if (layer_sizes.size() < 3)
    throw std::invalid_argument("mlp_init: at least one hidden layer is required");
  RngStream rng(seed, 0x6d6c7000u);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto n_in = layer_sizes[l], n_out = layer_sizes[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    Matrix w(n_out, n_in);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = rng.uniform(-a, a);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(n_out));
  }
  model.validate();
  return model;
}

Matrix mlp_forward_batch(const MlpModel& model, const Matrix& X) {
  if (X.rows() != model.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  Matrix h = X;
  const std::size_t last = model.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l)
    h = ((model.weights[l] * h).colwise() + model.biases[l]).array().tanh().matrix();
  return (model.weights[last] * h).colwise() + model.biases[last];
}

ParamVec mlp_forward(const MlpModel& model, const DataVec& x) {
  return mlp_forward_batch(model, x);
}

namespace {

double frobenius_penalty(const MlpModel& model, double l2_lambda) {
  if (l2_lambda == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t l = 1; l < model.weights.size(); ++l) s += model.weights[l].squaredNorm();
  return l2_lambda * s;
}

}  // namespace

double mlp_loss(const MlpModel& model, const Matrix& X, const Matrix& T, double l2_lambda) {
  if (X.cols() != T.cols() || X.cols() == 0)
    throw std::invalid_argument("mlp_loss: batch must be nonempty and aligned");
  const Matrix r = mlp_forward_batch(model, X) - T;
  return r.squaredNorm() / static_cast<double>(X.cols()) + frobenius_penalty(model, l2_lambda);
}

double mlp_loss_and_gradient(const MlpModel& model, const Matrix& X, const Matrix& T,
                             double l2_lambda, MlpGradient& grad) {
  if (X.cols() != T.cols() || X.cols() == 0)
    throw std::invalid_argument("mlp_gradient: batch must be nonempty and aligned");
  if (X.rows() != model.input_dim() || T.rows() != model.output_dim())
    throw std::invalid_argument("mlp_gradient: dimension mismatch");

  const std::size_t n_layers = model.weights.size();
  const double inv_b = 1.0 / static_cast<double>(X.cols());

  // Forward pass, keeping each hidden activation for the backward sweep.
  std::vector<Matrix> acts(n_layers);  // acts[l] = H^(l) input to W^(l); acts[0] aliases X by copy
  acts[0] = X;
  for (std::size_t l = 0; l + 1 < n_layers; ++l)
    acts[l + 1] = ((model.weights[l] * acts[l]).colwise() + model.biases[l]).array().tanh().matrix();
  const Matrix out = (model.weights[n_layers - 1] * acts[n_layers - 1]).colwise() +
                     model.biases[n_layers - 1];

  const Matrix resid = out - T;
  const double loss = resid.squaredNorm() * inv_b + frobenius_penalty(model, l2_lambda);

  grad.weights.resize(n_layers);
  grad.biases.resize(n_layers);
  Matrix delta = 2.0 * inv_b * resid;  // dJ/d(preactivation) of the output layer
  for (std::size_t l = n_layers; l-- > 0;) {
    grad.weights[l].noalias() = delta * acts[l].transpose();
    if (l2_lambda != 0.0 && l >= 1) grad.weights[l] += 2.0 * l2_lambda * model.weights[l];
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0)
      delta = (model.weights[l].transpose() * delta).array() * (1.0 - acts[l].array().square());
  }
  return loss;
}

MlpGradient mlp_gradient(const MlpModel& model, const Matrix& X, const Matrix& T, double l2_lambda) {
  MlpGradient grad;
  mlp_loss_and_gradient(model, X, T, l2_lambda, grad);
  return grad;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (minibatch_size < 1) throw std::invalid_argument("TrainConfig: minibatch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (l2_lambda < 0.0) throw std::invalid_argument("TrainConfig: l2_lambda must be >= 0");
  if (early_stopping_patience < 0) throw std::invalid_argument("TrainConfig: patience must be >= 0");
  if (lr_step_epochs < 1) throw std::invalid_argument("TrainConfig: lr_step_epochs must be >= 1");
}

namespace {

// Columns idx[begin..end) of the dataset gathered into contiguous batches.
void gather(const Dataset& data, const std::vector<Eigen::Index>& idx, std::size_t begin,
            std::size_t end, Matrix& X, Matrix& T) {
  const auto b = static_cast<Eigen::Index>(end - begin);
  X.resize(data.data_dim(), b);
  T.resize(data.param_dim(), b);
  for (std::size_t k = begin; k < end; ++k) {
    X.col(static_cast<Eigen::Index>(k - begin)) = data.xs.col(idx[k]);
    T.col(static_cast<Eigen::Index>(k - begin)) = data.thetas.col(idx[k]);
  }
}

// Plain MSE over the given indices, evaluated in chunks.
double mse_over(const MlpModel& model, const Dataset& data, const std::vector<Eigen::Index>& idx) {
  constexpr std::size_t kChunk = 4096;
  double acc = 0.0;
  Matrix X, T;
  for (std::size_t begin = 0; begin < idx.size(); begin += kChunk) {
    const std::size_t end = std::min(idx.size(), begin + kChunk);
    gather(data, idx, begin, end, X, T);
    acc += (mlp_forward_batch(model, X) - T).squaredNorm();
  }
  return acc / static_cast<double>(idx.size());
}

Vector rmse_over(const MlpModel& model, const Dataset& data, const std::vector<Eigen::Index>& idx) {
  constexpr std::size_t kChunk = 4096;
  Vector acc = Vector::Zero(data.param_dim());
  Matrix X, T;
  for (std::size_t begin = 0; begin < idx.size(); begin += kChunk) {
    const std::size_t end = std::min(idx.size(), begin + kChunk);
    gather(data, idx, begin, end, X, T);
    acc += (mlp_forward_batch(model, X) - T).array().square().matrix().rowwise().sum();
  }
  return (acc / static_cast<double>(idx.size())).cwiseSqrt();
}

}  // namespace

Vector mlp_rmse(const MlpModel& model, const Matrix& X, const Matrix& T) {
  const Matrix r = mlp_forward_batch(model, X) - T;
  return (r.array().square().rowwise().mean()).sqrt().matrix();
}

std::pair<MlpModel, TrainReport> mlp_train(const MlpModel& init, const Dataset& data,
                                           const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  data.validate();
  if (data.data_dim() != init.input_dim() || data.param_dim() != init.output_dim())
    throw std::invalid_argument("mlp_train: dataset dimensions do not match the model");
  auto train_idx = data.indices_of(Split::train);
  auto val_idx = data.indices_of(Split::validation);
  auto test_idx = data.indices_of(Split::test);
  if (train_idx.empty() || val_idx.empty())
    throw std::invalid_argument("mlp_train: dataset needs train and validation splits");

  const auto t0 = std::chrono::steady_clock::now();
  MlpModel model = init;
  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_best = 0;

  TrainReport report;
  MlpGradient grad;
  Matrix X, T;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate;
    if (cfg.lr_schedule == TrainConfig::LrSchedule::step_decay)
      lr *= std::pow(cfg.lr_decay, (epoch - 1) / cfg.lr_step_epochs);

    // Fisher-Yates shuffle keyed on (seed, epoch).
    RngStream shuffle_rng(cfg.seed, 0xe70c0000u + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = train_idx.size(); i > 1; --i)
      std::swap(train_idx[i - 1], train_idx[shuffle_rng.uniform_index(i)]);

    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < train_idx.size();
         begin += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end =
          std::min(train_idx.size(), begin + static_cast<std::size_t>(cfg.minibatch_size));
      gather(data, train_idx, begin, end, X, T);
      const double batch_loss = mlp_loss_and_gradient(model, X, T, cfg.l2_lambda, grad);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("mlp_train: training diverged at epoch " + std::to_string(epoch) +
                                 " (learning_rate=" + std::to_string(lr) + "): loss is not finite");
      epoch_loss += batch_loss;
      ++n_batches;
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l].noalias() -= lr * grad.weights[l];
        model.biases[l] -= lr * grad.biases[l];
      }
    }
    report.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));

    const double val = mse_over(model, data, val_idx);
    if (!std::isfinite(val))
      throw std::runtime_error("mlp_train: training diverged at epoch " + std::to_string(epoch) +
                               " (learning_rate=" + std::to_string(lr) +
                               "): validation loss is not finite");
    report.val_loss.push_back(val);
    report.stopped_epoch = epoch;

    if (val < best_val) {
      best_val = val;
      best = model;
      best_epoch = epoch;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= std::max(1, cfg.early_stopping_patience)) {
      break;
    }
  }

  report.best_epoch = best_epoch;
  report.train_rmse = rmse_over(best, data, train_idx);
  if (!test_idx.empty()) report.test_rmse = rmse_over(best, data, test_idx);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best), std::move(report)};
}

void save_model(const MlpModel& model, const std::string& path, double l2_lambda,
                std::uint64_t seed, std::uint64_t train_hash) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  nlohmann::json hdr{{"format", "abcnn-model"},
                     {"version", 1},
                     {"kind", "mlp"},
                     {"layer_sizes", model.layer_sizes},
                     {"activation", "tanh"},
                     {"standardize", "none"},
                     {"l2_lambda", l2_lambda},
                     {"seed", seed},
                     {"train_hash", train_hash}};
  out << hdr.dump() << '\n';
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    out.write(reinterpret_cast<const char*>(model.weights[l].data()),
              static_cast<std::streamsize>(sizeof(double) * model.weights[l].size()));
    out.write(reinterpret_cast<const char*>(model.biases[l].data()),
              static_cast<std::streamsize>(sizeof(double) * model.biases[l].size()));
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header line");
  nlohmann::json hdr = nlohmann::json::parse(line, nullptr, false);
  if (hdr.is_discarded()) throw std::runtime_error(path + ": header is not valid JSON");
  if (hdr.value("format", "") != "abcnn-model")
    throw std::runtime_error(path + ": not an abcnn model file");
  if (hdr.value("kind", "") != "mlp")
    throw std::runtime_error(path + ": checkpoint kind is not 'mlp'");
  if (hdr.value("activation", "") != "tanh")
    throw std::runtime_error(path + ": unsupported activation tag");

  MlpModel model;
  model.layer_sizes = hdr.at("layer_sizes").get<std::vector<Eigen::Index>>();
  if (model.layer_sizes.size() < 3) throw std::runtime_error(path + ": bad layer_sizes header");
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    Matrix w(model.layer_sizes[l + 1], model.layer_sizes[l]);
    Vector b(model.layer_sizes[l + 1]);
    in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(sizeof(double) * w.size()));
    in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(sizeof(double) * b.size()));
    if (!in)
      throw std::runtime_error(path + ": parameter payload does not match layer_sizes header");
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error(path + ": trailing bytes beyond declared parameters");
  model.validate();
  return model;
}

}  // namespace abcnn
