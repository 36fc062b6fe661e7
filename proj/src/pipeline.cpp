#include "abcnn/pipeline.hpp"

#include "abcnn/parallel.hpp"

#include <chrono>
#include <cmath>

namespace abcnn {

Simulator make_simulator(const ExperimentConfig& cfg) {
  return cfg.model == "ising" ? make_ising_simulator(cfg.ising_model())
                              : make_ma2_simulator(cfg.ma2_model());
}

Dataset generate_experiment_dataset(const ExperimentConfig& cfg, int n_threads) {
  cfg.validate();
  const auto n_train = cfg.scaled_n_train(), n_val = cfg.scaled_n_val(), n_test = cfg.scaled_n_test();
  const auto n = n_train + n_val + n_test;
  const auto prior = cfg.prior();
  const auto sim = make_simulator(cfg);

  Dataset ds;
  ds.model_tag = cfg.model;
  ds.seed = cfg.seed;
  ds.thetas.resize(sim.param_dim, n);
  ds.xs.resize(sim.data_dim, n);
  ds.splits.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    ds.splits[static_cast<std::size_t>(i)] =
        i < n_train ? Split::train : (i < n_train + n_val ? Split::validation : Split::test);

  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t i) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
        const ParamVec theta = draw_prior(prior, rng);
        ds.thetas.col(static_cast<Eigen::Index>(i)) = theta;
        ds.xs.col(static_cast<Eigen::Index>(i)) = sim.draw(theta, rng);
      },
      n_threads);
  return ds;
}

Dataset simulate_observation(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.obs_theta.empty())
    throw usage_error("simulate_observation: obs.theta is not set in the config");
  const auto sim = make_simulator(cfg);
  ParamVec theta(static_cast<Eigen::Index>(cfg.obs_theta.size()));
  for (std::size_t i = 0; i < cfg.obs_theta.size(); ++i)
    theta[static_cast<Eigen::Index>(i)] = cfg.obs_theta[i];

  RngStream rng(cfg.obs_seed, 0);
  Dataset ds;
  ds.model_tag = cfg.model;
  ds.seed = cfg.obs_seed;
  ds.thetas.resize(theta.size(), 1);
  ds.thetas.col(0) = theta;
  ds.xs.resize(sim.data_dim, 1);
  ds.xs.col(0) = sim.draw(theta, rng);
  ds.splits = {Split::test};
  return ds;
}

SummaryStatistic TrainOutcome::summary() const {
  if (mlp) return SummaryStatistic::from_mlp(*mlp);
  if (linear) return SummaryStatistic::from_linear(*linear);
  throw std::logic_error("TrainOutcome: no trained model present");
}

namespace {

std::string lambda_suffix(double lambda) {
  std::string s = format_g17(lambda);
  return ", λ=" + (lambda == 0.0 ? std::string("0") : s);
}

Vector linear_rmse_over(const LinearSummary& s, const Dataset& data, Split split) {
  const auto idx = data.indices_of(split);
  if (idx.empty()) return Vector();
  Vector acc = Vector::Zero(data.param_dim());
  constexpr std::size_t kChunk = 2048;
  Matrix xb, tb;
  for (std::size_t begin = 0; begin < idx.size(); begin += kChunk) {
    const std::size_t end = std::min(idx.size(), begin + kChunk);
    xb.resize(data.data_dim(), static_cast<Eigen::Index>(end - begin));
    tb.resize(data.param_dim(), static_cast<Eigen::Index>(end - begin));
    for (std::size_t k = begin; k < end; ++k) {
      xb.col(static_cast<Eigen::Index>(k - begin)) = data.xs.col(idx[k]);
      tb.col(static_cast<Eigen::Index>(k - begin)) = data.thetas.col(idx[k]);
    }
    acc += (s.predict_batch(xb) - tb).array().square().matrix().rowwise().sum();
  }
  return (acc / static_cast<double>(idx.size())).cwiseSqrt();
}

}  // namespace

TrainOutcome run_training(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  data.validate();
  TrainOutcome out;
  const auto t0 = std::chrono::steady_clock::now();

  if (cfg.nn_method == "semiauto") {
    const std::string basis_tag = cfg.effective_semiauto_basis();
    const CandidateBasis basis = basis_tag == "raw"
                                     ? CandidateBasis::raw()
                                     : CandidateBasis::poly(std::stoi(basis_tag.substr(4)));
    out.linear = fit_linear_summary(data, basis);
    out.method_label = "Semi-automatic";
    out.train_rmse = linear_rmse_over(*out.linear, data, Split::train);
    out.test_rmse = linear_rmse_over(*out.linear, data, Split::test);
  } else {
    const MlpModel init = mlp_init(cfg.layer_sizes(), cfg.seed);
    auto [model, report] = mlp_train(init, data, cfg.train_config());
    out.mlp = std::move(model);
    out.report = std::move(report);
    out.method_label =
        (cfg.nn_method == "ffnn" ? "FFNN" : "DNN") + lambda_suffix(cfg.nn_l2_lambda);
    out.train_rmse = out.report.train_rmse;
    out.test_rmse = out.report.test_rmse;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void save_training_outcome(const TrainOutcome& outcome, const std::string& checkpoint_path,
                           const ExperimentConfig& cfg, std::uint64_t train_hash) {
  if (outcome.mlp)
    save_model(*outcome.mlp, checkpoint_path, cfg.nn_l2_lambda, cfg.seed, train_hash);
  else if (outcome.linear)
    save_linear_summary(*outcome.linear, checkpoint_path, cfg.seed, train_hash);
  else
    throw std::logic_error("save_training_outcome: no trained model present");
}

SummaryStatistic load_summary_checkpoint(const std::string& path) {
  const std::string kind = checkpoint_kind(path);
  if (kind == "mlp") return SummaryStatistic::from_mlp(load_model(path));
  if (kind == "linear-summary") return SummaryStatistic::from_linear(load_linear_summary(path));
  throw std::runtime_error(path + ": unknown checkpoint kind '" + kind + "'");
}

SummaryStatistic resolve_summary(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "ising-sufficient") return SummaryStatistic::ising_sufficient();
  if (name == "ma2-autocov") return SummaryStatistic::ma2_autocov();
  if (name == "identity") return SummaryStatistic::identity(cfg.data_dim());
  return load_summary_checkpoint(name);
}

AbcResult run_abc(const ExperimentConfig& cfg, const SummaryStatistic& summary,
                  const DataVec& x_obs) {
  AbcConfig abc;
  abc.n_proposals = cfg.effective_abc_proposals();
  abc.mode = cfg.abc_mode == "quantile" ? AbcConfig::Mode::Quantile : AbcConfig::Mode::FixedEpsilon;
  abc.quantile = cfg.abc_quantile;
  abc.epsilon = cfg.abc_epsilon;
  if (cfg.abc_distance == "euclidean")
    abc.distance = DistanceMode::Euclidean;
  else if (cfg.abc_distance == "standardized")
    abc.distance = DistanceMode::StandardizedEuclidean;
  else
    abc.distance = summary.dim >= 2 ? DistanceMode::StandardizedEuclidean : DistanceMode::Euclidean;
  abc.seed = cfg.seed + 0x0abc;

  AbcResult result = abc_reject_summary(cfg.prior(), make_simulator(cfg), summary, x_obs, abc);
  if (result.n_accepted == 0 && abc.mode == AbcConfig::Mode::FixedEpsilon)
    throw empty_acceptance_error("abc: no draws accepted at epsilon=" + format_g17(abc.epsilon) +
                                 " after " + std::to_string(result.n_proposed) + " proposals");
  return result;
}

}  // namespace abcnn
