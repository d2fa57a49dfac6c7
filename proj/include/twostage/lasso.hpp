#pragma once

#include <vector>

#include "twostage/types.hpp"

namespace twostage {

/// Coordinate descent hit the sweep budget before certifying stationarity.
/// Carries the best iterate found so callers can inspect or resume it.
class MaxItersExceeded : public Error {
 public:
  MaxItersExceeded(LassoFit best, const std::string& what)
      : Error(what), best(std::move(best)) {}
  LassoFit best;
};

struct LambdaGrid {
  std::vector<double> values;  // strictly decreasing
  double lambda_max = 0.0;
  double ratio = 0.0;
};

struct SolverOptions {
  double tol = 1e-7;       // stationarity certificate threshold
  int max_sweeps = 100000;  // coordinate sweeps across all restarts
};

/// Smallest penalty with an all-zero solution is lambda_max = 2 max|X'y|;
/// the grid is log-equispaced from there down to ratio * lambda_max.
/// ratio <= 0 picks the default: 1e-3 when p > n, 1e-4 otherwise.
/// Throws InvalidRatio (ratio >= 1), DegenerateGrid (X'y == 0),
/// InvalidConfig (n_lambda < 1).
LambdaGrid lambda_grid(const RegressionDataset& ds, int n_lambda = 100, double ratio = 0.0);

/// Max subgradient residual of the objective ||y - X b||^2 + lambda ||b||_1:
/// for active coordinates |2 x_j'(y - Xb) - lambda sign(b_j)|, for inactive
/// ones max(0, |2 x_j'(y - Xb)| - lambda). Zero iff b is optimal.
double kkt_max_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta, double lambda);

/// Cyclic coordinate descent with an active-set strategy. Convergence is
/// declared only via the stationarity certificate, never via iterate
/// change. `init` warm-starts the solve. Throws MaxItersExceeded with the
/// best iterate attached when the sweep budget runs out.
LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const Eigen::VectorXd* init = nullptr, const SolverOptions& opts = {});

inline LassoFit fit_lasso(const RegressionDataset& ds, double lambda,
                          const Eigen::VectorXd* init = nullptr,
                          const SolverOptions& opts = {}) {
  return fit_lasso(ds.X, ds.y, lambda, init, opts);
}

/// Warm-started fits along a decreasing grid; fits[i] solves grid.values[i].
std::vector<LassoFit> fit_lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const LambdaGrid& grid, const SolverOptions& opts = {});

/// Which grid point a cross-validated selection resolves to. `one_se` is
/// the classic parsimony rule: the largest penalty whose mean error stays
/// within one standard error of the minimum. It selects far sparser models
/// than the raw minimizer and is the default everywhere a penalty is
/// picked "by CV".
enum class CvRule { one_se, min };

struct CvResult {
  LambdaGrid grid;
  std::vector<double> cv_mean;  // held-out mean squared error per grid value
  std::vector<double> cv_se;    // sd of fold means / sqrt(k)
  double lambda_min = 0.0;      // ties broken toward the larger penalty
  int lambda_min_index = -1;
  double lambda_1se = 0.0;      // largest penalty with cv_mean <= min + se(min)
  int lambda_1se_index = -1;    // always <= lambda_min_index
  int k = 0;
  std::vector<int> fold_of_row;
  /// Largest stationarity residual over every fold fit, for auditing.
  double max_kkt_violation = 0.0;

  double selected(CvRule rule) const {
    return rule == CvRule::min ? lambda_min : lambda_1se;
  }
  int selected_index(CvRule rule) const {
    return rule == CvRule::min ? lambda_min_index : lambda_1se_index;
  }
};

/// K-fold cross validation over the grid. The partition is a seeded random
/// shuffle split into near-equal folds; cv_mean pools every held-out squared
/// error. Fold paths are warm-started. Penalties whose cv_mean ties the
/// minimum within 1e-12 resolve to the largest such penalty.
CvResult cross_validate(const RegressionDataset& ds, const LambdaGrid& grid, int k,
                        std::uint64_t seed, const SolverOptions& opts = {});

/// Cross validation followed by a warm-started solve of the full data at
/// the penalty picked by `rule`. `cv_out`, when given, receives the CV
/// table; the returned fit's kkt_violation is its own certificate, while
/// the worst violation over the fold fits is available in the CV table.
LassoFit fit_lasso_cv(const RegressionDataset& ds, int n_lambda, double ratio, int k,
                      std::uint64_t seed, CvRule rule = CvRule::one_se,
                      const SolverOptions& opts = {}, CvResult* cv_out = nullptr);

}  // namespace twostage
