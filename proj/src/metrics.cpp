#include "abcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace abcnn {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vector rmse(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw std::invalid_argument("rmse: predictions and targets must align");
  if (predictions.cols() == 0) throw std::invalid_argument("rmse: empty input");
  return ((predictions - targets).array().square().rowwise().mean()).sqrt().matrix();
}

PosteriorMoments moments(const Matrix& draws) {
  const auto n = draws.cols();
  if (n < 2) throw std::invalid_argument("moments: need at least two draws");
  PosteriorMoments out;
  out.mean = draws.rowwise().mean();
  const Matrix centered = draws.colwise() - out.mean;
  out.std = (centered.array().square().rowwise().sum() / static_cast<double>(n - 1))
                .sqrt()
                .matrix();
  if (draws.rows() == 2) {
    const double s1 = out.std[0], s2 = out.std[1];
    if (s1 > 0.0 && s2 > 0.0) {
      const double cov = centered.row(0).dot(centered.row(1)) / static_cast<double>(n - 1);
      out.cor = cov / (s1 * s2);
    }
  }
  return out;
}

PosteriorMoments grid_moments(const Ma2PosteriorGrid& grid) {
  PosteriorMoments out;
  out.mean = grid.mean();
  out.std = grid.std();
  out.cor = grid.correlation();
  return out;
}

namespace {

// Average ranks, ties sharing the mean rank of their run.
Vector average_ranks(const Vector& v) {
  const auto n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  Vector ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] == v[order[static_cast<std::size_t>(i)]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[static_cast<std::size_t>(k)]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const Vector& a, const Vector& b) {
  const auto n = a.size();
  const double ma = a.mean(), mb = b.mean();
  const Vector ca = a.array() - ma, cb = b.array() - mb;
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (!(denom > 0.0)) throw std::runtime_error("correlation undefined: zero variance");
  (void)n;
  return ca.dot(cb) / denom;
}

}  // namespace

double spearman_rho(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman_rho: need at least two points");
  return pearson(average_ranks(a), average_ranks(b));
}

MonotonicityReport monotonicity_diagnostic(const SummaryStatistic& summary, const Dataset& test_data,
                                           bool exclude_saturated, int s_bins) {
  test_data.validate();
  if (summary.dim != 1)
    throw std::invalid_argument("monotonicity_diagnostic: expects a scalar summary");
  if (s_bins < 1) throw std::invalid_argument("monotonicity_diagnostic: s_bins must be >= 1");

  const auto n = test_data.size();
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(test_data.data_dim()))));
  const double cap = 2.0 * m * m;

  Vector s_star(n);
  for (Eigen::Index i = 0; i < n; ++i) s_star[i] = ising_sufficient_stat(test_data.xs.col(i));
  const Matrix s_all = summary.eval_batch(test_data.xs);

  std::vector<Eigen::Index> inc;
  inc.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (exclude_saturated && (s_star[i] == cap || s_star[i] == cap - 8.0)) continue;
    inc.push_back(i);
  }
  if (inc.size() < 2)
    throw std::runtime_error("monotonicity_diagnostic: fewer than two instances after exclusion");

  Vector ss(static_cast<Eigen::Index>(inc.size())), sv(static_cast<Eigen::Index>(inc.size()));
  for (std::size_t k = 0; k < inc.size(); ++k) {
    ss[static_cast<Eigen::Index>(k)] = s_star[inc[k]];
    sv[static_cast<Eigen::Index>(k)] = s_all(0, inc[k]);
  }

  MonotonicityReport report;
  report.rho = spearman_rho(sv, ss);
  report.n_included = static_cast<Eigen::Index>(inc.size());
  report.n_excluded = n - report.n_included;
  report.excluded_saturated = exclude_saturated;

  const double lo = sv.minCoeff(), hi = sv.maxCoeff();
  const double width = hi > lo ? (hi - lo) / s_bins : 1.0;
  std::map<std::pair<double, int>, Eigen::Index> counts;
  for (Eigen::Index k = 0; k < ss.size(); ++k) {
    int bin = width > 0.0 ? std::min(s_bins - 1, static_cast<int>((sv[k] - lo) / width)) : 0;
    ++counts[{ss[k], bin}];
  }
  for (const auto& [key, count] : counts)
    report.cells.push_back({key.first, lo + (key.second + 0.5) * width, count});
  return report;
}

ReplicateReport replicate_mse(const std::vector<std::pair<PosteriorMoments, PosteriorMoments>>& reps) {
  if (reps.size() < 2) throw std::invalid_argument("replicate_mse: need at least two replicates");
  const auto q = reps.front().first.mean.size();
  ReplicateReport out;
  out.n_replicates = reps.size();
  out.mse_mean = Vector::Zero(q);
  out.mse_std = Vector::Zero(q);
  double cor_acc = 0.0;
  for (const auto& [exact, abc] : reps) {
    if (exact.mean.size() != q || abc.mean.size() != q)
      throw std::invalid_argument("replicate_mse: inconsistent moment dimensions");
    out.mse_mean.array() += (exact.mean - abc.mean).array().square();
    out.mse_std.array() += (exact.std - abc.std).array().square();
    if (exact.cor && abc.cor) {
      cor_acc += (*exact.cor - *abc.cor) * (*exact.cor - *abc.cor);
      ++out.n_cor_defined;
    }
  }
  out.mse_mean /= static_cast<double>(reps.size());
  out.mse_std /= static_cast<double>(reps.size());
  out.mse_cor = out.n_cor_defined > 0 ? cor_acc / static_cast<double>(out.n_cor_defined) : 0.0;
  out.replicates = reps;
  return out;
}

std::string prediction_table_header(Eigen::Index q) {
  if (q == 1) return "Method,Training RMSE,Testing RMSE,Time (s)";
  std::string h = "Method";
  for (const char* phase : {"Training RMSE", "Testing RMSE"})
    for (Eigen::Index j = 0; j < q; ++j)
      h += "," + std::string(phase) + " (θ" + std::to_string(j + 1) + ")";
  return h + ",Time (s)";
}

std::string prediction_table_row(const std::string& method, const Vector& train_rmse,
                                 const Vector& test_rmse, double seconds) {
  std::string row = method;
  for (Eigen::Index j = 0; j < train_rmse.size(); ++j) row += "," + format_g17(train_rmse[j]);
  for (Eigen::Index j = 0; j < test_rmse.size(); ++j) row += "," + format_g17(test_rmse[j]);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", seconds);
  return row + "," + buf;
}

namespace {

std::string moments_header() { return "Posterior,mean(θ1),mean(θ2),std(θ1),std(θ2),cor(θ1,θ2)"; }

}  // namespace

void write_moments_csv(const std::string& path,
                       const std::vector<std::pair<std::string, PosteriorMoments>>& rows,
                       const std::string& config_stamp) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_moments_csv: cannot open " + path);
  out << "# " << config_stamp << "\n" << moments_header() << "\n";
  for (const auto& [label, m] : rows) {
    if (m.mean.size() != 2)
      throw std::invalid_argument("write_moments_csv: table shape requires q = 2");
    out << label << "," << format_g17(m.mean[0]) << "," << format_g17(m.mean[1]) << ","
        << format_g17(m.std[0]) << "," << format_g17(m.std[1]) << ","
        << (m.cor ? format_g17(*m.cor) : "NA") << "\n";
  }
  if (!out) throw std::runtime_error("write_moments_csv: write failed for " + path);
}

std::vector<std::pair<std::string, PosteriorMoments>> load_moments_csv(const std::string& path,
                                                                       std::string* config_stamp) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_moments_csv: cannot open " + path);
  std::vector<std::pair<std::string, PosteriorMoments>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (config_stamp && config_stamp->empty()) *config_stamp = line.substr(2);
      continue;
    }
    if (line.rfind("Posterior,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error(path + ": malformed moments row");
    PosteriorMoments m;
    m.mean.resize(2);
    m.std.resize(2);
    m.mean[0] = std::stod(cells[1]);
    m.mean[1] = std::stod(cells[2]);
    m.std[0] = std::stod(cells[3]);
    m.std[1] = std::stod(cells[4]);
    if (cells[5] != "NA") m.cor = std::stod(cells[5]);
    rows.emplace_back(cells[0], std::move(m));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no moment rows found");
  return rows;
}

void write_replicate_mse_csv(const std::string& path,
                             const std::vector<std::pair<std::string, ReplicateReport>>& rows,
                             const std::string& config_stamp) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_replicate_mse_csv: cannot open " + path);
  out << "# " << config_stamp << "\n" << moments_header() << "\n";
  for (const auto& [label, r] : rows) {
    if (r.mse_mean.size() != 2)
      throw std::invalid_argument("write_replicate_mse_csv: table shape requires q = 2");
    out << label << "," << format_g17(r.mse_mean[0]) << "," << format_g17(r.mse_mean[1]) << ","
        << format_g17(r.mse_std[0]) << "," << format_g17(r.mse_std[1]) << ","
        << format_g17(r.mse_cor) << "\n";
  }
  if (!out) throw std::runtime_error("write_replicate_mse_csv: write failed for " + path);
}

void write_monotonicity_csv(const std::string& path, const MonotonicityReport& report,
                            const std::string& config_stamp) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_monotonicity_csv: cannot open " + path);
  out << "# " << config_stamp << "\n";
  out << "# spearman_rho=" << format_g17(report.rho) << " n_included=" << report.n_included
      << " n_excluded=" << report.n_excluded
      << " excluded_saturated=" << (report.excluded_saturated ? 1 : 0) << "\n";
  out << "s_star,s,count\n";
  for (const auto& c : report.cells)
    out << format_g17(c.s_star) << "," << format_g17(c.s_center) << "," << c.count << "\n";
  if (!out) throw std::runtime_error("write_monotonicity_csv: write failed for " + path);
}

}  // namespace abcnn
