#pragma once

#include <cstdint>
#include <vector>

#include "twostage/lasso.hpp"

namespace twostage {

/// Sign-condition report for a support S with signs s: for each predictor
/// outside S the margin is 1 - |c21 C11^{-1} s| where C11 and C21 are the
/// corresponding blocks of the scaled Gram matrix (1/n) X'X. The condition
/// holds iff every margin is strictly positive.
struct IcReport {
  std::vector<int> checked;   // complement indices, aligned with margins
  Eigen::VectorXd margins;
  double eta_min = 1.0;       // 1.0 when the complement is empty
  bool holds = true;
};

/// Throws SingularC11 when the restricted Gram block is numerically
/// singular; InvalidConfig when `signs` has entries other than +1/-1.
IcReport irrepresentable_check(const RegressionDataset& ds, const SupportSet& S,
                               const Eigen::VectorXd& signs);

/// Smallest eigenvalue of (1/n) X_S' X_S, clamped at zero. Equals the
/// square of the smallest singular value of (1/sqrt(n)) X_S.
double c11_min_eigenvalue(const RegressionDataset& ds, const SupportSet& S);

/// max_i sum_{j in S} x_ij^2 / sqrt(n): the heaviest support row relative
/// to root-n growth. Reported as a raw statistic; no threshold is applied.
double support_row_mass(const RegressionDataset& ds, const SupportSet& S);

/// Fixed design plus data-generating truth for repeated-fit studies.
struct SignConsistencySettings {
  Eigen::MatrixXd X;
  Eigen::VectorXd beta_true;
  double sigma = 1.0;
  bool use_cv = true;
  double lambda_fixed = 0.0;  // used when use_cv is false
  int n_lambda = 100;
  double lambda_ratio = 0.0;
  int cv_folds = 5;
  CvRule cv_rule = CvRule::one_se;
  SolverOptions solver;
};

/// Fraction of replicates whose fitted sign vector matches sign(beta_true)
/// exactly in every coordinate (zeros included). Replicate r draws noise
/// from the stream (seed, noise, r).
double sign_consistency_rate(const SignConsistencySettings& settings, int n_reps,
                             std::uint64_t seed, int workers = 1);

/// Pearson correlation between sorted draws and normal quantiles at the
/// midpoint grid; 1 means perfectly normal-shaped. Affine-invariant in the
/// draws. Requires at least 20 draws; throws DegenerateDraws when all
/// draws coincide.
double qq_normality_score(const std::vector<double>& draws);

}  // namespace twostage
