#pragma once

#include <cstdint>
#include <optional>

#include "twostage/lasso.hpp"
#include "twostage/stability.hpp"

namespace twostage {

/// Thin SVD A = U diag(s) V' with U n-by-d, s and V d-by-d, d = min(n, cols).
struct ThinSvd {
  Eigen::MatrixXd U;
  Eigen::VectorXd singular_values;  // nonincreasing
  Eigen::MatrixXd V;
};

ThinSvd thin_svd(const Eigen::MatrixXd& A);

/// Indices with |beta_j| > zero_tol.
SupportSet extract_support(const Eigen::VectorXd& beta, double zero_tol = 0.0);

/// Ridge level exp(-n^c2 / 4); a vanishing alternative to the 1/n default.
inline double exponential_ridge_level(int n, double c2) {
  return std::exp(-std::pow(static_cast<double>(n), c2) / 4.0);
}

/// Modified least squares on a support: SVD of (1/sqrt(n)) X_S with
/// singular values below tau dropped from the inverse,
///   beta_S = (1/sqrt(n)) V diag(1/s_k if s_k >= tau else 0) U' y.
/// tau < 0 resolves to the 1/n default; tau == 0 keeps every positive
/// singular value (plain pseudo-inverse least squares). Equals OLS on the
/// support whenever tau^2 <= the smallest eigenvalue of (1/n) X_S' X_S.
TwoStageEstimate fit_mls(const RegressionDataset& ds, const SupportSet& S, double tau = -1.0);

/// Ridge refit on a support: (X_S' X_S + mu I) beta_S = X_S' y.
/// mu < 0 resolves to the 1/n default. mu == 0 demands a nonsingular
/// system and throws SingularSystem otherwise.
TwoStageEstimate fit_ridge_after(const RegressionDataset& ds, const SupportSet& S,
                                 double mu = -1.0);

/// Joint cross validation of the penalized fit and of the least-squares
/// refit on its support, sharing folds and warm-started fold paths. The
/// lasso curve scores the penalized predictions; the refit curve scores
/// what a second-stage pipeline predicts and bottoms out at far larger
/// penalties, where the support is nearly exact. Both preset second
/// stages share the refit curve since their predictions agree to O(mu/n).
/// The shared fold fits' worst stationarity residual is recorded on both
/// results.
struct PathCv {
  CvResult lasso;
  CvResult refit;
};

PathCv cross_validate_with_refit(const RegressionDataset& ds, const LambdaGrid& grid, int k,
                                 std::uint64_t seed, const SolverOptions& opts = {});

enum class SelectorKind { lasso_fixed, lasso_cv, stability };

struct SelectionConfig {
  SelectorKind kind = SelectorKind::lasso_cv;
  double lambda = 0.0;        // lasso_fixed
  int n_lambda = 100;         // lasso_cv grid
  double lambda_ratio = 0.0;  // 0 = dimension-based default
  int cv_folds = 5;
  CvRule cv_rule = CvRule::one_se;
  StabilityConfig stability;
  double zero_tol = 0.0;
  SolverOptions solver;
};

struct Stage2Config {
  Stage2Kind kind = Stage2Kind::mls;
  double tau = -1.0;  // mls cutoff, negative = 1/n
  double mu = -1.0;   // ridge level, negative = 1/n
};

struct TwoStageFit {
  TwoStageEstimate estimate;
  /// Stage-one coefficients (zero vector for the stability selector).
  Eigen::VectorXd stage1_beta;
  double lambda_used = 0.0;
  /// Refit prediction error curve when the cross-validated selector ran.
  std::optional<CvResult> cv;
  double max_kkt_violation = 0.0;
};

/// Full pipeline: select a support (fixed-penalty solve, cross-validated
/// solve, or stability selection), then refit on it. The cross-validated
/// selector tunes the penalty on the refit curve, so the whole pipeline
/// is what cross validation scores.
TwoStageFit fit_two_stage(const RegressionDataset& ds, const SelectionConfig& sel,
                          const Stage2Config& s2, std::uint64_t seed);

}  // namespace twostage
