#include "abcnn/abc.hpp"

#include "abcnn/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace abcnn {

namespace {

Matrix batch_by_loop(const std::function<Vector(const DataVec&)>& eval, Eigen::Index dim,
                     const Matrix& X) {
  Matrix out(dim, X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) out.col(i) = eval(X.col(i));
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SummaryStatistic SummaryStatistic::from_mlp(const MlpModel& model) {
  SummaryStatistic s;
  s.source = Source::DnnModel;
  s.dim = model.output_dim();
  s.eval = [model](const DataVec& x) { return mlp_forward(model, x); };
  s.eval_batch = [model](const Matrix& X) { return mlp_forward_batch(model, X); };
  return s;
}

SummaryStatistic SummaryStatistic::from_linear(const LinearSummary& summary) {
  SummaryStatistic s;
  s.source = Source::LinearSummary;
  s.dim = summary.output_dim();
  s.eval = [summary](const DataVec& x) { return summary.predict(x); };
  s.eval_batch = [summary](const Matrix& X) { return summary.predict_batch(X); };
  return s;
}

SummaryStatistic SummaryStatistic::ising_sufficient() {
  SummaryStatistic s;
  s.source = Source::IsingSufficient;
  s.dim = 1;
  s.eval = [](const DataVec& x) {
    Vector v(1);
    v[0] = ising_sufficient_stat(x);
    return v;
  };
  auto eval = s.eval;
  s.eval_batch = [eval](const Matrix& X) { return batch_by_loop(eval, 1, X); };
  return s;
}

SummaryStatistic SummaryStatistic::ma2_autocov() {
  SummaryStatistic s;
  s.source = Source::Ma2Autocov;
  s.dim = 2;
  s.eval = [](const DataVec& x) {
    auto [ac1, ac2] = ma2_autocovariance(x);
    Vector v(2);
    v << ac1, ac2;
    return v;
  };
  auto eval = s.eval;
  s.eval_batch = [eval](const Matrix& X) { return batch_by_loop(eval, 2, X); };
  return s;
}

SummaryStatistic SummaryStatistic::identity(Eigen::Index p) {
  SummaryStatistic s;
  s.source = Source::Identity;
  s.dim = p;
  s.eval = [](const DataVec& x) { return x; };
  s.eval_batch = [](const Matrix& X) { return X; };
  return s;
}

SummaryStatistic SummaryStatistic::custom(Source source, Eigen::Index dim,
                                          std::function<Vector(const DataVec&)> fn) {
  SummaryStatistic s;
  s.source = source;
  s.dim = dim;
  s.eval = std::move(fn);
  auto eval = s.eval;
  s.eval_batch = [eval, dim](const Matrix& X) { return batch_by_loop(eval, dim, X); };
  return s;
}

const char* summary_source_name(SummaryStatistic::Source s) {
  switch (s) {
    case SummaryStatistic::Source::DnnModel: return "dnn";
    case SummaryStatistic::Source::LinearSummary: return "linear-summary";
    case SummaryStatistic::Source::IsingSufficient: return "ising-sufficient";
    case SummaryStatistic::Source::Ma2Autocov: return "ma2-autocov";
    case SummaryStatistic::Source::Identity: return "identity";
  }
  return "?";
}

Simulator make_ising_simulator(const IsingModel& model) {
  model.validate();
  Simulator sim;
  sim.tag = "ising";
  sim.discrete = true;
  sim.param_dim = 1;
  sim.data_dim = static_cast<Eigen::Index>(model.m) * model.m;
  sim.draw = [model](const ParamVec& theta, RngStream& rng) {
    return ising_simulate(model, theta, rng);
  };
  return sim;
}

Simulator make_ising_exact_simulator(const IsingEnumeration& enumeration) {
  Simulator sim;
  sim.tag = "ising";
  sim.discrete = true;
  sim.param_dim = 1;
  sim.data_dim = static_cast<Eigen::Index>(enumeration.m()) * enumeration.m();
  sim.draw = [&enumeration](const ParamVec& theta, RngStream& rng) {
    if (theta.size() != 1 || !(theta[0] >= 0.0))
      throw std::invalid_argument("ising exact simulator: theta must be a nonnegative scalar");
    return enumeration.sample_state(theta[0], rng);
  };
  return sim;
}

Simulator make_ma2_simulator(const Ma2Model& model) {
  model.validate();
  Simulator sim;
  sim.tag = "ma2";
  sim.discrete = false;
  sim.param_dim = 2;
  sim.data_dim = model.p;
  sim.draw = [model](const ParamVec& theta, RngStream& rng) {
    return ma2_simulate(model, theta, rng);
  };
  return sim;
}

double summary_distance(const Vector& a, const Vector& b, DistanceMode mode, const Vector* scale) {
  if (a.size() != b.size()) throw std::invalid_argument("summary_distance: length mismatch");
  if (mode == DistanceMode::Euclidean) return (a - b).norm();
  if (scale == nullptr || scale->size() != a.size())
    throw std::invalid_argument("summary_distance: standardized mode needs a matching scale");
  if ((scale->array() <= 0.0).any())
    throw std::invalid_argument("summary_distance: scales must be positive");
  return ((a - b).array() / scale->array()).matrix().norm();
}

void AbcConfig::validate() const {
  if (n_proposals < 1) throw std::invalid_argument("AbcConfig: n_proposals must be >= 1");
  if (mode == Mode::Quantile && !(quantile > 0.0 && quantile <= 1.0))
    throw std::invalid_argument("AbcConfig: quantile must lie in (0, 1]");
  if (mode == Mode::FixedEpsilon && !(epsilon >= 0.0))
    throw std::invalid_argument("AbcConfig: epsilon must be >= 0");
}

AbcResult abc_reject_exact(const PriorSpec& prior, const Simulator& sim, const DataVec& x_obs,
                           std::int64_t n, std::uint64_t seed, std::int64_t proposal_budget) {
  if (!sim.discrete)
    throw std::invalid_argument(
        "abc_reject_exact: exact-match acceptance requires a discrete model (got '" + sim.tag +
        "'); a continuous draw matches x_obs with probability zero");
  if (x_obs.size() != sim.data_dim)
    throw std::invalid_argument("abc_reject_exact: x_obs dimension mismatch");
  if (n < 0) throw std::invalid_argument("abc_reject_exact: n must be >= 0");

  AbcResult result;
  result.seed = seed;
  result.distance_mode = DistanceMode::Euclidean;
  result.realized_epsilon = 0.0;
  if (n == 0) {
    result.accepted.resize(prior.param_dim(), 0);
    result.distances.resize(0);
    return result;
  }

  std::vector<Vector> accepted;
  std::int64_t proposed = 0;
  while (static_cast<std::int64_t>(accepted.size()) < n) {
    if (proposed >= proposal_budget) {
      const double rate =
          proposed > 0 ? static_cast<double>(accepted.size()) / static_cast<double>(proposed) : 0.0;
      std::ostringstream msg;
      msg << "abc_reject_exact: proposal budget " << proposal_budget << " exhausted with "
          << accepted.size() << "/" << n << " accepted (acceptance rate " << rate
          << "); expected completion needs ~"
          << (rate > 0.0 ? static_cast<std::int64_t>(static_cast<double>(n) / rate) : -1)
          << " proposals";
      throw std::runtime_error(msg.str());
    }
    RngStream rng(seed, static_cast<std::uint64_t>(proposed));
    ++proposed;
    const ParamVec theta = draw_prior(prior, rng);
    const DataVec x = sim.draw(theta, rng);
    if ((x.array() == x_obs.array()).all()) accepted.push_back(theta);
  }

  result.n_proposed = proposed;
  result.n_accepted = static_cast<std::int64_t>(accepted.size());
  result.accepted.resize(accepted.front().size(), result.n_accepted);
  for (std::int64_t i = 0; i < result.n_accepted; ++i)
    result.accepted.col(i) = accepted[static_cast<std::size_t>(i)];
  result.distances = Vector::Zero(result.n_accepted);
  result.realized_epsilon = std::nextafter(0.0, 1.0);
  return result;
}

AbcResult abc_reject_summary(const PriorSpec& prior, const Simulator& sim,
                             const SummaryStatistic& summary, const DataVec& x_obs,
                             const AbcConfig& cfg) {
  cfg.validate();
  if (x_obs.size() != sim.data_dim)
    throw std::invalid_argument("abc_reject_summary: x_obs dimension mismatch");
  const Vector s_obs = summary.eval(x_obs);
  if (s_obs.size() != summary.dim)
    throw std::invalid_argument("abc_reject_summary: summary dimension inconsistent with x_obs");

  const auto n = cfg.n_proposals;
  const auto q = prior.param_dim();
  Matrix thetas(q, n);
  Matrix summaries(summary.dim, n);

  // Chunked pool generation: simulate a block across threads (stream keyed on
  // the global proposal index), then evaluate its summaries in one batch.
  constexpr std::int64_t kBlock = 8192;
  Matrix xs;
  for (std::int64_t begin = 0; begin < n; begin += kBlock) {
    const std::int64_t b = std::min(kBlock, n - begin);
    xs.resize(sim.data_dim, b);
    parallel_for(
        static_cast<std::size_t>(b),
        [&](std::size_t k) {
          RngStream rng(cfg.seed, static_cast<std::uint64_t>(begin + static_cast<std::int64_t>(k)));
          const ParamVec theta = draw_prior(prior, rng);
          thetas.col(begin + static_cast<Eigen::Index>(k)) = theta;
          xs.col(static_cast<Eigen::Index>(k)) = sim.draw(theta, rng);
        },
        cfg.n_threads);
    summaries.middleCols(begin, b) = summary.eval_batch(xs);
  }

  Vector scale;
  if (cfg.distance == DistanceMode::StandardizedEuclidean) {
    const Vector mean = summaries.rowwise().mean();
    Vector var = (summaries.colwise() - mean).array().square().rowwise().sum() /
                 std::max<double>(1.0, static_cast<double>(n - 1));
    scale = var.cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index i = 0; i < scale.size(); ++i)
      if (!(scale[i] > 0.0)) scale[i] = 1.0;  // degenerate component: fall back to raw units
  }

  Vector dist(n);
  if (cfg.distance == DistanceMode::StandardizedEuclidean)
    dist = ((summaries.colwise() - s_obs).array().colwise() / scale.array())
               .square()
               .colwise()
               .sum()
               .sqrt()
               .transpose();
  else
    dist = (summaries.colwise() - s_obs).colwise().norm().transpose();

  std::vector<Eigen::Index> keep;
  double realized = 0.0;
  if (cfg.mode == AbcConfig::Mode::FixedEpsilon) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool ok = cfg.epsilon > 0.0 ? dist[i] < cfg.epsilon : dist[i] == 0.0;
      if (ok) keep.push_back(i);
    }
    realized = cfg.epsilon > 0.0 ? cfg.epsilon : std::nextafter(0.0, 1.0);
  } else {
    const auto k = static_cast<Eigen::Index>(
        std::min<double>(static_cast<double>(n),
                         std::ceil(cfg.quantile * static_cast<double>(n))));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto cmp = [&](Eigen::Index a, Eigen::Index b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    };
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), cmp);
    keep.assign(order.begin(), order.begin() + k);
    std::sort(keep.begin(), keep.end());
    double dmax = 0.0;
    for (auto i : keep) dmax = std::max(dmax, dist[i]);
    realized = std::nextafter(dmax, std::numeric_limits<double>::infinity());
  }

  AbcResult result;
  result.seed = cfg.seed;
  result.distance_mode = cfg.distance;
  result.distance_scale = scale;
  result.n_proposed = n;
  result.n_accepted = static_cast<std::int64_t>(keep.size());
  result.realized_epsilon = realized;
  result.accepted.resize(q, result.n_accepted);
  result.distances.resize(result.n_accepted);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    result.accepted.col(static_cast<Eigen::Index>(j)) = thetas.col(keep[j]);
    result.distances[static_cast<Eigen::Index>(j)] = dist[keep[j]];
  }
  return result;
}

void save_abc_result_csv(const AbcResult& result, const std::string& path,
                         const std::string& config_stamp) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_abc_result_csv: cannot open " + path);
  out << "# " << config_stamp << "\n";
  const auto q = result.accepted.rows();
  for (Eigen::Index j = 0; j < q; ++j) out << "theta" << (j + 1) << ",";
  out << "distance\n";
  for (Eigen::Index i = 0; i < result.n_accepted; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) out << format_double(result.accepted(j, i)) << ",";
    out << format_double(result.distances[i]) << "\n";
  }
  if (!out) throw std::runtime_error("save_abc_result_csv: write failed for " + path);
}

void save_abc_result_sidecar(const AbcResult& result, const std::string& path,
                             const std::string& config_stamp, double wall_time_seconds) {
  nlohmann::json j{{"realized_epsilon", result.realized_epsilon},
                   {"n_proposed", result.n_proposed},
                   {"n_accepted", result.n_accepted},
                   {"distance", result.distance_mode == DistanceMode::Euclidean
                                    ? "euclidean"
                                    : "standardized-euclidean"},
                   {"seed", result.seed},
                   {"config", config_stamp},
                   {"wall_time_seconds", wall_time_seconds}};
  if (result.distance_scale.size() > 0) {
    std::vector<double> s(result.distance_scale.data(),
                          result.distance_scale.data() + result.distance_scale.size());
    j["distance_scale"] = s;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_abc_result_sidecar: cannot open " + path);
  out << j.dump(2) << "\n";
}

Matrix load_draws_csv(const std::string& path, std::string* config_stamp) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_draws_csv: cannot open " + path);
  std::string line;
  std::vector<std::vector<double>> rows;
  Eigen::Index q = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (config_stamp && config_stamp->empty()) *config_stamp = line.substr(2);
      continue;
    }
    if (line.rfind("theta", 0) == 0) continue;  // header
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 2) throw std::runtime_error(path + ": malformed draw row");
    vals.pop_back();  // trailing distance column
    if (q < 0) q = static_cast<Eigen::Index>(vals.size());
    if (q != static_cast<Eigen::Index>(vals.size()))
      throw std::runtime_error(path + ": inconsistent column count");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no accepted draws in file");
  Matrix out(q, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < q; ++j) out(j, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(j)];
  return out;
}

}  // namespace abcnn
