// Command-line front end: simulate | train | abc | oracle | eval.
// Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 empty acceptance.

#include "abcnn/dataset_io.hpp"
#include "abcnn/metrics.hpp"
#include "abcnn/parallel.hpp"
#include "abcnn/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace abcnn;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;

  ExperimentConfig resolve() const {
    std::vector<std::string> ov = overrides;
    if (scale) ov.push_back("scale = " + format_g17(*scale));
    if (seed) ov.push_back("seed = " + std::to_string(*seed));
    return load_config(config_path, ov);
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "Override a config key, e.g. --set nn.epochs=50");
  cmd->add_option("--scale", opts.scale, "Scale factor for the dataset sizes");
  cmd->add_option("--seed", opts.seed, "Experiment seed");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

DataVec load_observation(const std::string& path, const ExperimentConfig& cfg) {
  const Dataset obs = load_dataset(path);
  if (obs.model_tag != cfg.model)
    throw usage_error("x_obs file " + path + " has model_tag '" + obs.model_tag +
                      "' but the config model is '" + cfg.model + "'");
  if (obs.data_dim() != cfg.data_dim())
    throw usage_error("x_obs dimension does not match the configured model");
  return obs.xs.col(0);
}

void check_stamps(const std::vector<std::string>& stamps, const std::string& expected, bool force) {
  if (force) return;
  for (const auto& s : stamps)
    if (s != expected)
      throw usage_error("input stamp mismatch: '" + s + "' vs '" + expected +
                        "' (pass --force to override)");
}

int cmd_simulate(const CommonOpts& common, const std::string& out_dir) {
  const ExperimentConfig cfg = common.resolve();
  fs::create_directories(out_dir);
  const Dataset ds = generate_experiment_dataset(cfg);
  save_dataset(ds.subset(ds.indices_of(Split::train)), out_dir + "/train.ds");
  save_dataset(ds.subset(ds.indices_of(Split::validation)), out_dir + "/val.ds");
  save_dataset(ds.subset(ds.indices_of(Split::test)), out_dir + "/test.ds");
  if (!cfg.obs_theta.empty()) save_dataset(simulate_observation(cfg), out_dir + "/xobs.ds");
  write_text(out_dir + "/config.txt", "# " + cfg.stamp() + "\n" + cfg.canonical());
  std::cout << "simulate: wrote " << cfg.scaled_n_train() << "/" << cfg.scaled_n_val() << "/"
            << cfg.scaled_n_test() << " " << cfg.model << " pairs to " << out_dir << "\n";
  return 0;
}

Dataset load_labeled(const std::string& path, Split split, const ExperimentConfig& cfg) {
  Dataset ds = load_dataset(path);
  if (ds.model_tag != cfg.model)
    throw usage_error(path + ": model_tag '" + ds.model_tag + "' does not match config model '" +
                      cfg.model + "'");
  std::fill(ds.splits.begin(), ds.splits.end(), split);
  return ds;
}

Dataset concat(const std::vector<Dataset>& parts) {
  Eigen::Index n = 0;
  for (const auto& d : parts) n += d.size();
  Dataset out;
  out.model_tag = parts.front().model_tag;
  out.seed = parts.front().seed;
  out.thetas.resize(parts.front().param_dim(), n);
  out.xs.resize(parts.front().data_dim(), n);
  out.splits.reserve(static_cast<std::size_t>(n));
  Eigen::Index at = 0;
  for (const auto& d : parts) {
    if (d.param_dim() != out.param_dim() || d.data_dim() != out.data_dim())
      throw usage_error("dataset files have inconsistent dimensions");
    out.thetas.middleCols(at, d.size()) = d.thetas;
    out.xs.middleCols(at, d.size()) = d.xs;
    out.splits.insert(out.splits.end(), d.splits.begin(), d.splits.end());
    at += d.size();
  }
  return out;
}

int cmd_train(const CommonOpts& common, const std::string& train_path, const std::string& val_path,
              const std::string& test_path, const std::string& method, const std::string& out_ckpt,
              const std::string& report_dir) {
  CommonOpts local = common;
  if (!method.empty()) local.overrides.push_back("nn.method = " + method);
  const ExperimentConfig cfg = local.resolve();

  std::vector<Dataset> parts;
  parts.push_back(load_labeled(train_path, Split::train, cfg));
  parts.push_back(load_labeled(val_path, Split::validation, cfg));
  if (!test_path.empty()) parts.push_back(load_labeled(test_path, Split::test, cfg));
  const Dataset data = concat(parts);

  const TrainOutcome outcome = run_training(cfg, data);
  save_training_outcome(outcome, out_ckpt, cfg, data.content_hash());

  const std::string stamp = cfg.stamp();
  if (!report_dir.empty()) {
    fs::create_directories(report_dir);
    if (outcome.mlp) {
      std::string csv = "# " + stamp + "\nepoch,train_loss,val_loss\n";
      for (std::size_t e = 0; e < outcome.report.train_loss.size(); ++e)
        csv += std::to_string(e + 1) + "," + format_g17(outcome.report.train_loss[e]) + "," +
               format_g17(outcome.report.val_loss[e]) + "\n";
      write_text(report_dir + "/train_report.csv", csv);
    }
    write_text(report_dir + "/prediction.csv",
               "# " + stamp + "\n" + prediction_table_header(cfg.param_dim()) + "\n" +
                   prediction_table_row(outcome.method_label, outcome.train_rmse,
                                        outcome.test_rmse, outcome.seconds) +
                   "\n");
  }
  std::cout << prediction_table_header(cfg.param_dim()) << "\n"
            << prediction_table_row(outcome.method_label, outcome.train_rmse, outcome.test_rmse,
                                    outcome.seconds)
            << "\n";
  return 0;
}

int cmd_abc(const CommonOpts& common, const std::string& summary_name, const std::string& xobs_path,
            const std::string& out_prefix) {
  const ExperimentConfig cfg = common.resolve();
  const SummaryStatistic summary = resolve_summary(summary_name, cfg);
  const DataVec x_obs = load_observation(xobs_path, cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const AbcResult result = run_abc(cfg, summary, x_obs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_abc_result_csv(result, out_prefix + ".csv", cfg.stamp());
  save_abc_result_sidecar(result, out_prefix + ".json", cfg.stamp(), secs);
  std::cout << "abc: accepted " << result.n_accepted << "/" << result.n_proposed
            << " (realized epsilon " << format_g17(result.realized_epsilon) << ") -> " << out_prefix
            << ".csv\n";
  return 0;
}

int cmd_oracle(const CommonOpts& common, const std::string& xobs_path, const std::string& out_prefix,
               bool dump_grid) {
  const ExperimentConfig cfg = common.resolve();
  const DataVec x_obs = load_observation(xobs_path, cfg);
  const std::string stamp = cfg.stamp();

  if (cfg.model == "ma2") {
    const Ma2PosteriorGrid grid = ma2_exact_posterior(x_obs, cfg.oracle_resolution);
    write_moments_csv(out_prefix + "_moments.csv", {{"Exact", grid_moments(grid)}}, stamp);
    if (dump_grid) {
      std::string csv = "# " + stamp + "\ntheta1,theta2,log_posterior,probability\n";
      for (int i = 0; i < grid.resolution(); ++i)
        for (int j = 0; j < grid.resolution(); ++j)
          if (grid.probabilities()(i, j) > 0.0)
            csv += format_g17(grid.theta1_centers()[i]) + "," +
                   format_g17(grid.theta2_centers()[j]) + "," +
                   format_g17(grid.log_posterior()(i, j)) + "," +
                   format_g17(grid.probabilities()(i, j)) + "\n";
      write_text(out_prefix + "_grid.csv", csv);
    }
    std::cout << "oracle: wrote " << out_prefix << "_moments.csv\n";
    return 0;
  }

  if (cfg.ising_m > 4)
    throw usage_error("oracle: refusing Ising enumeration for m > 4 (2^(m^2) states)");
  const IsingEnumeration enumeration(cfg.ising_m);
  const Vector grid = exponential_prior_grid(cfg.prior_rate, cfg.oracle_grid_points, cfg.oracle_grid_max);
  const double s_obs = ising_sufficient_stat(x_obs);
  const PriorSpec prior = cfg.prior();

  std::string csv = "# " + stamp + "\n";
  csv += "# xobs_s_star=" + format_g17(s_obs) + " xobs_posterior_mean=" +
         format_g17(enumeration.posterior_mean_given_stat(prior, s_obs, grid)) + "\n";
  csv += "s_star,posterior_mean\n";
  for (double s : enumeration.stat_values())
    csv += format_g17(s) + "," + format_g17(enumeration.posterior_mean_given_stat(prior, s, grid)) + "\n";
  write_text(out_prefix + "_posterior_mean.csv", csv);
  std::cout << "oracle: wrote " << out_prefix << "_posterior_mean.csv\n";
  return 0;
}

int cmd_eval_rmse(const CommonOpts& common, const std::string& summary_name,
                  const std::string& data_path, const std::string& label, const std::string& out) {
  const ExperimentConfig cfg = common.resolve();
  const SummaryStatistic summary = resolve_summary(summary_name, cfg);
  const Dataset data = load_dataset(data_path);
  if (summary.dim != data.param_dim())
    throw usage_error("eval rmse: summary dimension does not match the dataset parameters");

  std::string csv = "# " + cfg.stamp() + "\nMethod,Split";
  for (Eigen::Index j = 0; j < data.param_dim(); ++j)
    csv += ",RMSE(θ" + std::to_string(j + 1) + ")";
  csv += "\n";
  for (Split split : {Split::train, Split::validation, Split::test}) {
    const auto idx = data.indices_of(split);
    if (idx.empty()) continue;
    const Dataset sub = data.subset(idx);
    const Vector r = rmse(summary.eval_batch(sub.xs), sub.thetas);
    csv += label + "," + split_name(split);
    for (Eigen::Index j = 0; j < r.size(); ++j) csv += "," + format_g17(r[j]);
    csv += "\n";
  }
  write_text(out, csv);
  std::cout << csv;
  return 0;
}

int cmd_eval_moments(const CommonOpts& common, const std::string& draws_path,
                     const std::string& label, const std::string& out, bool force) {
  const ExperimentConfig cfg = common.resolve();
  std::string stamp;
  const Matrix draws = load_draws_csv(draws_path, &stamp);
  check_stamps({stamp}, cfg.stamp(), force);
  write_moments_csv(out, {{label, moments(draws)}}, cfg.stamp());
  std::cout << "eval moments: wrote " << out << "\n";
  return 0;
}

std::pair<std::string, std::string> split_label_arg(const std::string& arg, char sep,
                                                    const char* what) {
  auto pos = arg.find(sep);
  if (pos == std::string::npos || pos == 0 || pos + 1 == arg.size())
    throw usage_error(std::string("expected LABEL") + sep + "PATH for " + what + " (got '" + arg +
                      "')");
  return {arg.substr(0, pos), arg.substr(pos + 1)};
}

int cmd_eval_table3(const CommonOpts& common, const std::string& exact_path,
                    const std::vector<std::string>& abc_args, const std::string& out, bool force) {
  const ExperimentConfig cfg = common.resolve();
  std::vector<std::string> stamps;
  std::string stamp;
  auto rows = load_moments_csv(exact_path, &stamp);
  stamps.push_back(stamp);
  for (const auto& arg : abc_args) {
    auto [label, path] = split_label_arg(arg, '=', "--abc");
    stamp.clear();
    const Matrix draws = load_draws_csv(path, &stamp);
    stamps.push_back(stamp);
    rows.emplace_back(label, moments(draws));
  }
  check_stamps(stamps, cfg.stamp(), force);
  write_moments_csv(out, rows, cfg.stamp());
  std::cout << "eval table3: wrote " << out << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_eval_monotonicity(const CommonOpts& common, const std::string& summary_name,
                          const std::string& data_path, bool include_saturated,
                          const std::string& out) {
  const ExperimentConfig cfg = common.resolve();
  const SummaryStatistic summary = resolve_summary(summary_name, cfg);
  const Dataset data = load_dataset(data_path);
  const MonotonicityReport report = monotonicity_diagnostic(summary, data, !include_saturated);
  write_monotonicity_csv(out, report, cfg.stamp());
  std::cout << "eval monotonicity: spearman_rho=" << format_g17(report.rho) << " (included "
            << report.n_included << ", excluded " << report.n_excluded << ") -> " << out << "\n";
  return 0;
}

int cmd_eval_replicate_mse(const CommonOpts& common, const std::string& label,
                           const std::vector<std::string>& pair_args, const std::string& out,
                           bool force) {
  const ExperimentConfig cfg = common.resolve();
  std::vector<std::pair<PosteriorMoments, PosteriorMoments>> reps;
  std::vector<std::string> stamps;
  for (const auto& arg : pair_args) {
    auto [exact_path, draws_path] = split_label_arg(arg, ';', "--pair");
    std::string s1, s2;
    const auto exact_rows = load_moments_csv(exact_path, &s1);
    const Matrix draws = load_draws_csv(draws_path, &s2);
    stamps.push_back(s1);
    stamps.push_back(s2);
    reps.emplace_back(exact_rows.front().second, moments(draws));
  }
  check_stamps(stamps, cfg.stamp(), force);
  write_replicate_mse_csv(out, {{label, replicate_mse(reps)}}, cfg.stamp());
  std::cout << "eval replicate-mse: wrote " << out << " (" << reps.size() << " replicates)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network summary statistics for ABC rejection sampling"};
  app.require_subcommand(1);

  CommonOpts sim_opts;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "Generate train/val/test datasets (and x_obs)");
  add_common(sim, sim_opts);
  sim->add_option("--out", sim_out, "Output directory")->required();

  CommonOpts train_opts;
  std::string train_train, train_val, train_test, train_method, train_out, train_report;
  auto* train = app.add_subcommand("train", "Train a summary statistic (dnn | ffnn | semiauto)");
  add_common(train, train_opts);
  train->add_option("--train", train_train, "Training dataset file")->required();
  train->add_option("--val", train_val, "Validation dataset file")->required();
  train->add_option("--test", train_test, "Test dataset file");
  train->add_option("--method", train_method, "Overrides nn.method");
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--report-dir", train_report, "Directory for train_report.csv and prediction.csv");

  CommonOpts abc_opts;
  std::string abc_summary, abc_xobs, abc_out;
  auto* abc = app.add_subcommand("abc", "ABC rejection sampling with a summary statistic");
  add_common(abc, abc_opts);
  abc->add_option("--summary", abc_summary,
                  "Checkpoint path or builtin: ising-sufficient | ma2-autocov | identity")
      ->required();
  abc->add_option("--xobs", abc_xobs, "Observed-data dataset file")->required();
  abc->add_option("--out", abc_out, "Output prefix (.csv and .json)")->required();

  CommonOpts oracle_opts;
  std::string oracle_xobs, oracle_out;
  bool oracle_grid = false;
  auto* oracle = app.add_subcommand("oracle", "Exact posterior (MA(2) grid; Ising enumeration)");
  add_common(oracle, oracle_opts);
  oracle->add_option("--xobs", oracle_xobs, "Observed-data dataset file")->required();
  oracle->add_option("--out", oracle_out, "Output prefix")->required();
  oracle->add_flag("--grid", oracle_grid, "Also dump the full MA(2) posterior grid");

  auto* eval = app.add_subcommand("eval", "Metric tables from result files");
  eval->require_subcommand(1);

  CommonOpts ev_rmse_opts;
  std::string ev_rmse_summary, ev_rmse_data, ev_rmse_label = "summary", ev_rmse_out;
  auto* ev_rmse = eval->add_subcommand("rmse", "Prediction RMSE of a summary on a dataset");
  add_common(ev_rmse, ev_rmse_opts);
  ev_rmse->add_option("--summary", ev_rmse_summary)->required();
  ev_rmse->add_option("--data", ev_rmse_data)->required();
  ev_rmse->add_option("--label", ev_rmse_label);
  ev_rmse->add_option("--out", ev_rmse_out)->required();

  CommonOpts ev_mom_opts;
  std::string ev_mom_draws, ev_mom_label = "ABC", ev_mom_out;
  bool ev_mom_force = false;
  auto* ev_mom = eval->add_subcommand("moments", "Posterior moments of accepted draws");
  add_common(ev_mom, ev_mom_opts);
  ev_mom->add_option("--draws", ev_mom_draws)->required();
  ev_mom->add_option("--label", ev_mom_label);
  ev_mom->add_option("--out", ev_mom_out)->required();
  ev_mom->add_flag("--force", ev_mom_force, "Skip config-hash checks");

  CommonOpts ev_t3_opts;
  std::string ev_t3_exact, ev_t3_out;
  std::vector<std::string> ev_t3_abc;
  bool ev_t3_force = false;
  auto* ev_t3 = eval->add_subcommand("table3", "Exact vs ABC posterior moment table");
  add_common(ev_t3, ev_t3_opts);
  ev_t3->add_option("--exact", ev_t3_exact, "Oracle moments CSV")->required();
  ev_t3->add_option("--abc", ev_t3_abc, "LABEL=draws.csv (repeatable)")->required();
  ev_t3->add_option("--out", ev_t3_out)->required();
  ev_t3->add_flag("--force", ev_t3_force, "Skip config-hash checks");

  CommonOpts ev_mono_opts;
  std::string ev_mono_summary, ev_mono_data, ev_mono_out;
  bool ev_mono_include = false;
  auto* ev_mono = eval->add_subcommand("monotonicity", "Spearman diagnostic vs the Ising S*");
  add_common(ev_mono, ev_mono_opts);
  ev_mono->add_option("--summary", ev_mono_summary)->required();
  ev_mono->add_option("--data", ev_mono_data)->required();
  ev_mono->add_flag("--include-saturated", ev_mono_include,
                    "Keep instances with S* in {2m^2-8, 2m^2}");
  ev_mono->add_option("--out", ev_mono_out)->required();

  CommonOpts ev_rep_opts;
  std::string ev_rep_label, ev_rep_out;
  std::vector<std::string> ev_rep_pairs;
  bool ev_rep_force = false;
  auto* ev_rep = eval->add_subcommand("replicate-mse", "Moment MSE across replicate observations");
  add_common(ev_rep, ev_rep_opts);
  ev_rep->add_option("--label", ev_rep_label)->required();
  ev_rep->add_option("--pair", ev_rep_pairs, "exact_moments.csv;abc_draws.csv (repeatable)")
      ->required();
  ev_rep->add_option("--out", ev_rep_out)->required();
  ev_rep->add_flag("--force", ev_rep_force, "Skip config-hash checks");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(sim_opts, sim_out);
    if (train->parsed())
      return cmd_train(train_opts, train_train, train_val, train_test, train_method, train_out,
                       train_report);
    if (abc->parsed()) return cmd_abc(abc_opts, abc_summary, abc_xobs, abc_out);
    if (oracle->parsed()) return cmd_oracle(oracle_opts, oracle_xobs, oracle_out, oracle_grid);
    if (ev_rmse->parsed())
      return cmd_eval_rmse(ev_rmse_opts, ev_rmse_summary, ev_rmse_data, ev_rmse_label, ev_rmse_out);
    if (ev_mom->parsed())
      return cmd_eval_moments(ev_mom_opts, ev_mom_draws, ev_mom_label, ev_mom_out, ev_mom_force);
    if (ev_t3->parsed())
      return cmd_eval_table3(ev_t3_opts, ev_t3_exact, ev_t3_abc, ev_t3_out, ev_t3_force);
    if (ev_mono->parsed())
      return cmd_eval_monotonicity(ev_mono_opts, ev_mono_summary, ev_mono_data, ev_mono_include,
                                   ev_mono_out);
    if (ev_rep->parsed())
      return cmd_eval_replicate_mse(ev_rep_opts, ev_rep_label, ev_rep_pairs, ev_rep_out,
                                    ev_rep_force);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const empty_acceptance_error& e) {
    std::cerr << "empty acceptance: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
