#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "twostage/two_stage.hpp"

namespace twostage {

enum class BootstrapMethod { residual, paired };
enum class CiKind { basic, percentile };

/// What each bootstrap replicate computes. The penalty is reused from the
/// original fit by default; per-replicate cross validation is opt-in
/// because it multiplies cost and is rarely wanted.
struct RefitConfig {
  double lambda = 0.0;
  bool re_cv = false;
  int n_lambda = 100;
  double lambda_ratio = 0.0;
  int cv_folds = 5;
  CvRule cv_rule = CvRule::one_se;  // only read when re_cv is set
  /// Present: refit the support with this second stage. Absent: replicates
  /// are the penalized coefficients themselves.
  std::optional<Stage2Config> stage2;
  double zero_tol = 0.0;
  SolverOptions solver;
  /// Warm start for the replicate solves, typically the original
  /// penalized fit. Falls back to the point estimate when absent.
  std::optional<Eigen::VectorXd> warm_start;
};

struct BootstrapEnsemble {
  /// Estimate the resampling is centered on.
  Eigen::VectorXd point_beta;
  /// Populated when the point estimate came from a two-stage fit.
  std::optional<TwoStageEstimate> point_estimate;
  /// One row per successful replicate, in replicate order.
  Eigen::MatrixXd replicates;
  std::vector<int> failed;  // replicate ids whose solve did not certify
  int B = 0;
  BootstrapMethod method = BootstrapMethod::residual;
  double lambda = 0.0;
  double max_kkt_violation = 0.0;
  /// Rows of the dataset the ensemble was drawn from.
  int n_rows = 0;
};

/// Residuals y - X beta shifted to mean zero, so resampled noise adds no
/// systematic offset.
Eigen::VectorXd centered_residuals(const RegressionDataset& ds, const Eigen::VectorXd& beta);

/// Residual scheme: draws noise from the centered residuals around the
/// point fit X beta and refits on the synthetic response. Paired scheme:
/// resamples (x_i, y_i) rows with replacement and refits. Replicate b
/// draws only from the stream (seed, bootstrap, b), so the ensemble is
/// reproducible at any worker count. A replicate whose solve fails is
/// recorded and skipped; the run aborts if more than 1% fail.
BootstrapEnsemble bootstrap_ensemble(const RegressionDataset& ds,
                                     const Eigen::VectorXd& point_beta, const RefitConfig& refit,
                                     int B, BootstrapMethod method, std::uint64_t seed,
                                     int workers = 1);

struct IntervalSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.0;
  CiKind kind = CiKind::basic;
};

/// Equal-tailed intervals from replicate quantiles (linear-interpolation
/// rule). Percentile: [q_{a/2}, q_{1-a/2}]. Basic: reflected around the
/// point estimate, [2 b - q_{1-a/2}, 2 b - q_{a/2}].
IntervalSet confidence_intervals(const BootstrapEnsemble& ens, double level, CiKind kind);

/// One-dimensional 2-Wasserstein distance between empirical samples:
/// quantile functions compared on the midpoint grid (i - 1/2) / m,
/// m = max(sizes). For equal sizes this is exactly the root mean square
/// difference of sorted values.
double mallows_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Distance between a Monte Carlo sampling distribution of
/// sqrt(n) (beta_hat_j - beta_star_j) and the matching bootstrap
/// distribution sqrt(n) (rep_j - point_j) at coordinate j.
double mallows_check(const std::vector<double>& sampling_draws, const BootstrapEnsemble& ens,
                     int j);

}  // namespace twostage
