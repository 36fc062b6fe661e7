#include "abcnn/config.hpp"

#include "abcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace abcnn {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::int64_t scaled(std::int64_t n, double scale) {
  return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::llround(n * scale)));
}

std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) continue;
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw usage_error("config: invalid number '" + cell + "' for key " + key);
    }
  }
  return out;
}

}  // namespace

std::int64_t ExperimentConfig::scaled_n_train() const { return scaled(n_train, scale); }
std::int64_t ExperimentConfig::scaled_n_val() const { return scaled(n_val, scale); }
std::int64_t ExperimentConfig::scaled_n_test() const { return scaled(n_test, scale); }

std::int64_t ExperimentConfig::effective_abc_proposals() const {
  if (abc_n_proposals > 0) return abc_n_proposals;
  return model == "ising" ? 1000000 : 100000;
}

std::string ExperimentConfig::effective_semiauto_basis() const {
  if (!semiauto_basis.empty()) return semiauto_basis;
  return model == "ising" ? "raw" : "poly4";
}

PriorSpec ExperimentConfig::prior() const {
  return model == "ising" ? PriorSpec::exponential(prior_rate) : PriorSpec::uniform_triangle_ma2();
}

IsingModel ExperimentConfig::ising_model() const {
  return IsingModel{ising_m, ising_sweeps, ising_burn_in};
}

Ma2Model ExperimentConfig::ma2_model() const { return Ma2Model{ma2_p}; }

Eigen::Index ExperimentConfig::data_dim() const {
  return model == "ising" ? static_cast<Eigen::Index>(ising_m) * ising_m : ma2_p;
}

Eigen::Index ExperimentConfig::param_dim() const { return model == "ising" ? 1 : 2; }

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig cfg;
  cfg.epochs = nn_epochs;
  cfg.minibatch_size = nn_minibatch;
  cfg.learning_rate = nn_learning_rate;
  cfg.lr_schedule = nn_lr_schedule == "constant" ? TrainConfig::LrSchedule::constant
                                                 : TrainConfig::LrSchedule::step_decay;
  cfg.lr_step_epochs = nn_lr_step;
  cfg.lr_decay = nn_lr_decay;
  cfg.l2_lambda = nn_l2_lambda;
  cfg.early_stopping_patience = nn_patience > 0 ? nn_patience : 1000000;
  cfg.seed = seed;
  return cfg;
}

std::vector<Eigen::Index> ExperimentConfig::layer_sizes() const {
  const int hidden = nn_method == "ffnn" ? 1 : nn_hidden_layers;
  std::vector<Eigen::Index> sizes{data_dim()};
  for (int l = 0; l < hidden; ++l) sizes.push_back(nn_hidden_units);
  sizes.push_back(param_dim());
  return sizes;
}

void ExperimentConfig::validate() const {
  if (model != "ising" && model != "ma2")
    throw usage_error("config: model must be 'ising' or 'ma2' (got '" + model + "')");
  if (!(scale > 0.0)) throw usage_error("config: scale must be positive");
  if (ising_m < 2) throw usage_error("config: ising.m must be >= 2");
  if (ising_burn_in < 0) throw usage_error("config: ising.burn_in must be >= 0");
  if (ising_sweeps < 1) throw usage_error("config: ising.sweeps must be >= 1");
  if (!(prior_rate > 0.0)) throw usage_error("config: prior.rate must be positive");
  if (ma2_p < 3) throw usage_error("config: ma2.p must be >= 3");
  if (scaled_n_train() < 1) throw usage_error("config: data.n_train must be >= 1 after scaling");
  if (scaled_n_val() < 1) throw usage_error("config: data.n_val must be >= 1 after scaling");
  if (scaled_n_test() < 1) throw usage_error("config: data.n_test must be >= 1 after scaling");
  if (!obs_theta.empty() && static_cast<Eigen::Index>(obs_theta.size()) != param_dim())
    throw usage_error("config: obs.theta must have " + std::to_string(param_dim()) + " components");
  if (nn_method != "dnn" && nn_method != "ffnn" && nn_method != "semiauto")
    throw usage_error("config: nn.method must be dnn, ffnn or semiauto");
  if (nn_hidden_layers < 1) throw usage_error("config: nn.hidden_layers must be >= 1");
  if (nn_hidden_units < 1) throw usage_error("config: nn.hidden_units must be >= 1");
  if (nn_epochs < 1) throw usage_error("config: nn.epochs must be >= 1");
  if (nn_minibatch < 1) throw usage_error("config: nn.minibatch must be >= 1");
  if (!(nn_learning_rate >= 0.0)) throw usage_error("config: nn.learning_rate must be >= 0");
  if (nn_lr_schedule != "constant" && nn_lr_schedule != "step-decay")
    throw usage_error("config: nn.lr_schedule must be constant or step-decay");
  if (nn_lr_step < 1) throw usage_error("config: nn.lr_step must be >= 1");
  if (nn_l2_lambda < 0.0) throw usage_error("config: nn.l2_lambda must be >= 0");
  if (nn_patience < 0) throw usage_error("config: nn.patience must be >= 0");
  const std::string basis = effective_semiauto_basis();
  if (basis != "raw" && !(basis.rfind("poly", 0) == 0 && basis.size() > 4))
    throw usage_error("config: semiauto.basis must be raw or polyK");
  if (abc_mode != "quantile" && abc_mode != "epsilon")
    throw usage_error("config: abc.mode must be quantile or epsilon");
  if (abc_mode == "quantile" && !(abc_quantile > 0.0 && abc_quantile <= 1.0))
    throw usage_error("config: abc.quantile must lie in (0, 1]");
  if (abc_mode == "epsilon" && !(abc_epsilon >= 0.0))
    throw usage_error("config: abc.epsilon must be >= 0");
  if (abc_distance != "auto" && abc_distance != "euclidean" && abc_distance != "standardized")
    throw usage_error("config: abc.distance must be auto, euclidean or standardized");
  if (oracle_resolution < 50) throw usage_error("config: oracle.resolution must be >= 50");
  if (oracle_grid_points < 2) throw usage_error("config: oracle.grid_points must be >= 2");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "abc.distance = " << abc_distance << "\n";
  out << "abc.epsilon = " << format_g17(abc_epsilon) << "\n";
  out << "abc.mode = " << abc_mode << "\n";
  out << "abc.n_proposals = " << effective_abc_proposals() << "\n";
  out << "abc.quantile = " << format_g17(abc_quantile) << "\n";
  out << "data.n_test = " << scaled_n_test() << "\n";
  out << "data.n_train = " << scaled_n_train() << "\n";
  out << "data.n_val = " << scaled_n_val() << "\n";
  if (model == "ising") {
    out << "ising.burn_in = " << ising_burn_in << "\n";
    out << "ising.m = " << ising_m << "\n";
    out << "ising.sweeps = " << ising_sweeps << "\n";
  } else {
    out << "ma2.p = " << ma2_p << "\n";
  }
  out << "model = " << model << "\n";
  out << "nn.epochs = " << nn_epochs << "\n";
  out << "nn.hidden_layers = " << (nn_method == "ffnn" ? 1 : nn_hidden_layers) << "\n";
  out << "nn.hidden_units = " << nn_hidden_units << "\n";
  out << "nn.l2_lambda = " << format_g17(nn_l2_lambda) << "\n";
  out << "nn.learning_rate = " << format_g17(nn_learning_rate) << "\n";
  out << "nn.lr_decay = " << format_g17(nn_lr_decay) << "\n";
  out << "nn.lr_schedule = " << nn_lr_schedule << "\n";
  out << "nn.lr_step = " << nn_lr_step << "\n";
  out << "nn.method = " << nn_method << "\n";
  out << "nn.minibatch = " << nn_minibatch << "\n";
  out << "nn.patience = " << nn_patience << "\n";
  // obs.* identify the observation instance, not the experiment; replicate
  // pipelines vary them under one config hash.
  out << "oracle.grid_max = " << format_g17(oracle_grid_max) << "\n";
  out << "oracle.grid_points = " << oracle_grid_points << "\n";
  out << "oracle.resolution = " << oracle_resolution << "\n";
  if (model == "ising") out << "prior.rate = " << format_g17(prior_rate) << "\n";
  out << "seed = " << seed << "\n";
  out << "semiauto.basis = " << effective_semiauto_basis() << "\n";
  return out.str();
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a_str(canonical()); }

std::string ExperimentConfig::stamp() const {
  std::ostringstream out;
  out << "config_hash=" << std::hex << config_hash() << std::dec << " seed=" << seed;
  return out.str();
}

namespace {

void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto as_i64 = [&](const std::string& v) {
    try {
      return static_cast<std::int64_t>(std::stoll(v));
    } catch (const std::exception&) {
      throw usage_error("config: invalid integer '" + v + "' for key " + key);
    }
  };
  auto as_int = [&](const std::string& v) { return static_cast<int>(as_i64(v)); };
  auto as_u64 = [&](const std::string& v) {
    try {
      return static_cast<std::uint64_t>(std::stoull(v));
    } catch (const std::exception&) {
      throw usage_error("config: invalid integer '" + v + "' for key " + key);
    }
  };
  auto as_double = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw usage_error("config: invalid number '" + v + "' for key " + key);
    }
  };

  if (key == "model") cfg.model = value;
  else if (key == "seed") cfg.seed = as_u64(value);
  else if (key == "scale") cfg.scale = as_double(value);
  else if (key == "ising.m") cfg.ising_m = as_int(value);
  else if (key == "ising.burn_in") cfg.ising_burn_in = as_int(value);
  else if (key == "ising.sweeps") cfg.ising_sweeps = as_int(value);
  else if (key == "prior.rate") cfg.prior_rate = as_double(value);
  else if (key == "ma2.p") cfg.ma2_p = as_int(value);
  else if (key == "data.n_train") cfg.n_train = as_i64(value);
  else if (key == "data.n_val") cfg.n_val = as_i64(value);
  else if (key == "data.n_test") cfg.n_test = as_i64(value);
  else if (key == "obs.theta") cfg.obs_theta = parse_double_list(value, key);
  else if (key == "obs.seed") cfg.obs_seed = as_u64(value);
  else if (key == "nn.method") cfg.nn_method = value;
  else if (key == "nn.hidden_layers") cfg.nn_hidden_layers = as_int(value);
  else if (key == "nn.hidden_units") cfg.nn_hidden_units = as_int(value);
  else if (key == "nn.epochs") cfg.nn_epochs = as_int(value);
  else if (key == "nn.minibatch") cfg.nn_minibatch = as_int(value);
  else if (key == "nn.learning_rate") cfg.nn_learning_rate = as_double(value);
  else if (key == "nn.lr_schedule") cfg.nn_lr_schedule = value;
  else if (key == "nn.lr_step") cfg.nn_lr_step = as_int(value);
  else if (key == "nn.lr_decay") cfg.nn_lr_decay = as_double(value);
  else if (key == "nn.l2_lambda") cfg.nn_l2_lambda = as_double(value);
  else if (key == "nn.patience") cfg.nn_patience = as_int(value);
  else if (key == "semiauto.basis") cfg.semiauto_basis = value;
  else if (key == "abc.n_proposals") cfg.abc_n_proposals = as_i64(value);
  else if (key == "abc.mode") cfg.abc_mode = value;
  else if (key == "abc.quantile") cfg.abc_quantile = as_double(value);
  else if (key == "abc.epsilon") cfg.abc_epsilon = as_double(value);
  else if (key == "abc.distance") cfg.abc_distance = value;
  else if (key == "oracle.resolution") cfg.oracle_resolution = as_int(value);
  else if (key == "oracle.grid_points") cfg.oracle_grid_points = as_int(value);
  else if (key == "oracle.grid_max") cfg.oracle_grid_max = as_double(value);
  else throw usage_error("config: unknown key '" + key + "'");
}

void apply_line(ExperimentConfig& cfg, const std::string& raw, const std::string& where) {
  std::string line = raw;
  auto hash = line.find('#');
  if (hash != std::string::npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) return;
  auto eq = line.find('=');
  if (eq == std::string::npos) throw usage_error(where + ": expected 'key = value' (got '" + raw + "')");
  apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

}  // namespace

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw usage_error("config: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) apply_line(cfg, line, path);
  }
  for (const auto& ov : overrides) apply_line(cfg, ov, "--set");
  cfg.validate();
  return cfg;
}

ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides) {
  return load_config("", overrides);
}

std::string read_stamp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_stamp: cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') return line.substr(2);
    break;
  }
  throw std::runtime_error("read_stamp: no stamp comment in " + path);
}

}  // namespace abcnn
