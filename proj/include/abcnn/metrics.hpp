#pragma once

#include "abcnn/abc.hpp"
#include "abcnn/ma2.hpp"
#include "abcnn/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace abcnn {

// Component-wise sqrt of mean squared error; columns are samples.
Vector rmse(const Matrix& predictions, const Matrix& targets);

struct PosteriorMoments {
  Vector mean;
  Vector std;                  // unbiased sample std per component
  std::optional<double> cor;   // Pearson for q = 2; empty when undefined

  bool operator==(const PosteriorMoments&) const = default;
};

// Sample mean, unbiased std and (q = 2) Pearson correlation of draws.
// Zero-variance input leaves cor unset instead of propagating NaN.
PosteriorMoments moments(const Matrix& draws);

// Moments of an exact MA(2) grid posterior in the same shape.
PosteriorMoments grid_moments(const Ma2PosteriorGrid& grid);

// Spearman rank correlation with average ranks on ties.
double spearman_rho(const Vector& a, const Vector& b);

struct MonotonicityReport {
  double rho = 0.0;                 // Spearman(S, S*) over the included instances
  Eigen::Index n_included = 0;
  Eigen::Index n_excluded = 0;
  bool excluded_saturated = false;
  // Heatmap triples (S* value, S bin center, count).
  struct Cell {
    double s_star;
    double s_center;
    Eigen::Index count;
  };
  std::vector<Cell> cells;
};

// Rank association between a scalar summary S(x) and the Ising sufficient
// statistic S*(x) over the test split. exclude_saturated drops instances
// with S* in {2m^2 - 8, 2m^2} (the near-saturated corner mass).
MonotonicityReport monotonicity_diagnostic(const SummaryStatistic& summary, const Dataset& test_data,
                                           bool exclude_saturated, int s_bins = 60);

struct ReplicateReport {
  std::size_t n_replicates = 0;
  Vector mse_mean;   // per component
  Vector mse_std;    // per component
  double mse_cor = 0.0;
  std::size_t n_cor_defined = 0;  // replicates entering mse_cor
  std::vector<std::pair<PosteriorMoments, PosteriorMoments>> replicates;  // (exact, abc)
};

// Per-moment mean squared difference between exact and ABC posterior
// moments across replicates.
ReplicateReport replicate_mse(const std::vector<std::pair<PosteriorMoments, PosteriorMoments>>& reps);

// CSV export. Column names follow the experiment tables:
//   prediction (q = 1): Method,Training RMSE,Testing RMSE,Time (s)
//   prediction (q = 2): Method,Training RMSE (θ1),...,Testing RMSE (θ2),Time (s)
//   moments / replicate MSE: Posterior,mean(θ1),mean(θ2),std(θ1),std(θ2),cor(θ1,θ2)
std::string prediction_table_header(Eigen::Index q);
std::string prediction_table_row(const std::string& method, const Vector& train_rmse,
                                 const Vector& test_rmse, double seconds);

void write_moments_csv(const std::string& path, const std::vector<std::pair<std::string, PosteriorMoments>>& rows,
                       const std::string& config_stamp);
std::vector<std::pair<std::string, PosteriorMoments>> load_moments_csv(const std::string& path,
                                                                       std::string* config_stamp = nullptr);
void write_replicate_mse_csv(const std::string& path,
                             const std::vector<std::pair<std::string, ReplicateReport>>& rows,
                             const std::string& config_stamp);
void write_monotonicity_csv(const std::string& path, const MonotonicityReport& report,
                            const std::string& config_stamp);

std::string format_g17(double v);

}  // namespace abcnn
