#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "twostage/bootstrap.hpp"
#include "twostage/two_stage.hpp"

namespace twostage {

/// One benchmark setting: fixed Gaussian design with an optional Toeplitz
/// correlation, sparse truth, homoskedastic noise. The eight canonical
/// settings come from ExperimentConfig::example; any field may be
/// overridden afterwards for desk-scale runs.
struct ExperimentConfig {
  int example_id = 1;
  int n = 200;
  int p = 500;
  int s = 10;          // nonzero coefficients
  double rho = 0.0;    // Toeplitz correlation, 0 = identity
  int beta_case = 1;   // 1: positive two-block magnitudes, 2: mixed signs
  double sigma = 1.0;
  int n_reps = 100;
  int B = 500;         // bootstrap replicates per dataset
  double level = 0.90;
  int test_size = 500;
  std::uint64_t seed = 1;
  int workers = 1;
  int n_lambda = 100;
  double lambda_ratio = 0.0;  // 0 = dimension-based default
  int cv_folds = 5;
  SolverOptions solver;

  static ExperimentConfig example(int id);
};

/// Sigma(i, j) = rho^|i - j|.
Eigen::MatrixXd toeplitz_covariance(int p, double rho);

/// The two canonical coefficient patterns (require s == 10):
/// case 1 is five entries of 1.5 then five of 0.75, case 2 mixes signs:
/// (1.5, 1.5, -1.5, -1.5, 1.5, 0.75, -0.75, 0.75, -0.75, -0.75).
Eigen::VectorXd true_beta(int beta_case, int p, int s = 10);

/// Arbitrary leading magnitudes, zero elsewhere.
Eigen::VectorXd true_beta(const std::vector<double>& magnitudes, int p);

/// Rows drawn once from N(0, Sigma) via the stream (seed, design,
/// example_id), then standardized. The design stays fixed across
/// replicates of an experiment.
Eigen::MatrixXd generate_fixed_design(const ExperimentConfig& cfg);

struct TestSet {
  Eigen::MatrixXd X;  // raw draws from N(0, Sigma), not standardized
  Eigen::VectorXd y;
};

/// Single held-out set shared by every replicate of an experiment.
TestSet generate_test_set(const ExperimentConfig& cfg, const Eigen::VectorXd& beta_star);

enum class BenchMethod { lasso, lasso_mls, lasso_ridge };
std::string method_name(BenchMethod m);

struct EstimationMetrics {
  double bias_sq = 0.0;   // || mean(beta_hat) - beta_star ||^2
  double mse_mean = 0.0;  // mean of || beta_hat - beta_star ||^2
  double mse_sd = 0.0;
  double pmse_mean = 0.0;
  double pmse_sd = 0.0;
};

struct CoverageGroup {
  double coverage = 0.0;
  double mean_length = 0.0;
};

struct CoverageMetrics {
  CoverageGroup nonzero_basic, zero_basic;
  CoverageGroup nonzero_percentile, zero_percentile;
};

struct MetricsReport {
  ExperimentConfig config;
  std::map<std::string, EstimationMetrics> estimation;
  std::map<std::string, CoverageMetrics> coverage;
  /// Worst stationarity residual over every internal fit of the run.
  double max_kkt_violation = 0.0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  /// Long format: method,example,metric,group,value with a header row.
  std::string to_csv_long() const;
};

/// Per replicate: fresh noise on the fixed design, cross-validated
/// penalty, penalized fit plus both refits, squared estimation error and
/// held-out prediction error for each method.
MetricsReport run_estimation_experiment(const ExperimentConfig& cfg);

/// Per replicate dataset: cross-validated penalty, then three interval
/// constructions around it (residual scheme on the two-stage fit,
/// residual scheme on the penalized fit, paired scheme on the penalized
/// fit), each at both interval kinds; tallies closed-interval coverage of
/// the truth and interval lengths by coefficient group.
MetricsReport run_coverage_experiment(const ExperimentConfig& cfg);

struct SamplingDraws {
  std::vector<int> coords;
  /// n_draws x |coords| matrices of sqrt(n) (beta_hat_j - beta_star_j).
  Eigen::MatrixXd lasso;
  Eigen::MatrixXd mls;
  Eigen::MatrixXd ridge;
  double max_kkt_violation = 0.0;
};

/// Repeated-fit sampling distributions at selected coordinates, all three
/// methods in one pass over the replicates.
SamplingDraws sampling_distribution_draws_multi(const ExperimentConfig& cfg,
                                                const std::vector<int>& coords, int n_draws);

std::vector<double> sampling_distribution_draws(const ExperimentConfig& cfg, BenchMethod method,
                                                int j, int n_draws);

}  // namespace twostage
