#pragma once

#include <cstdint>
#include <vector>

#include "twostage/lasso.hpp"
#include "twostage/rng.hpp"

namespace twostage {

/// Per-coordinate penalty weights in (0, 1]: coordinate k pays
/// lambda |beta_k| / w_k, so smaller weights penalize harder.
struct StabilityConfig {
  double alpha = 0.5;      // weakened weight value
  double p_w = 0.5;        // probability a coordinate gets the weak weight
  int n_subsamples = 100;
  double pi_thr = 0.6;
  int n_lambda = 25;         // penalty grid for the profile
  double lambda_ratio = 0.1;
  bool with_replacement = true;  // subsample rows with replacement
};

/// Solves min ||y - X b||^2 + lambda sum_k |b_k| / w_k by rescaling column
/// k by w_k, running the plain solver, and mapping back b_k = w_k g_k.
/// The stationarity certificate is checked on the rescaled problem. All
/// weights must be positive.
LassoFit fit_weighted_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                            const Eigen::VectorXd& weights, const Eigen::VectorXd* init = nullptr,
                            const SolverOptions& opts = {});

/// Draws weights w_k = alpha with probability p_w, else 1, then solves the
/// weighted problem. `weights_out`, when given, receives the drawn weights.
LassoFit fit_randomized_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                              double alpha, double p_w, Rng& rng,
                              Eigen::VectorXd* weights_out = nullptr,
                              const SolverOptions& opts = {});

struct SelectionProfile {
  /// pi(k, l): fraction of subsample draws in which coordinate k was
  /// selected at penalty level l.
  Eigen::MatrixXd pi;
  std::vector<double> lambda_values;
  int n_subsamples = 0;
};

/// Repeatedly draws floor(n/2) rows (with replacement by default), redraws
/// randomized penalty weights, fits the weighted solver along the penalty
/// grid, and tallies selection frequencies.
SelectionProfile selection_profile(const RegressionDataset& ds,
                                   const std::vector<double>& lambda_values,
                                   const StabilityConfig& cfg, std::uint64_t seed,
                                   const SolverOptions& opts = {});

/// Coordinates whose selection frequency reaches pi_thr at any penalty
/// level. pi_thr must lie in (0.5, 1).
SupportSet stable_set(const SelectionProfile& profile, double pi_thr);

struct SparseEigenvalueEstimate {
  double phi_min = 0.0;  // smallest ||X_K a|| / ||a|| found
  double phi_max = 0.0;  // largest ||X_K a|| / ||a|| found
  int subset_size = 0;
  bool exact = false;
  int n_trials = 0;
};

/// Extreme column-submatrix singular values over subsets of ceil(k)
/// predictors. Randomized subset search by default (phi_min is then an
/// upper bound on the true minimum, phi_max a lower bound on the true
/// maximum); exact enumeration is available for p <= 20. Values are
/// unnormalized, so a single standardized column gives sqrt(n).
SparseEigenvalueEstimate sparse_eigenvalue_estimate(const Eigen::MatrixXd& X, double k,
                                                    int n_trials, std::uint64_t seed,
                                                    bool exact = false);

}  // namespace twostage
