#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <optional>
#include <vector>

#include "twostage/errors.hpp"

namespace twostage {

/// A fixed-design regression problem y = X beta + eps with no intercept.
struct RegressionDataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  /// True coefficients, when known (simulated data).
  std::optional<Eigen::VectorXd> beta_true;
  /// True noise level, when known.
  std::optional<double> sigma_true;
  /// Whether columns are centered with mean square (1/n) sum x_ij^2 == 1.
  bool standardized = false;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

/// Sorted, duplicate-free set of predictor indices in [0, p).
class SupportSet {
 public:
  SupportSet() = default;

  SupportSet(std::vector<int> indices, int p) : indices_(std::move(indices)), p_(p) {
    if (p_ < 0) throw InvalidConfig("SupportSet: negative dimension");
    std::sort(indices_.begin(), indices_.end());
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] < 0 || indices_[i] >= p_)
        throw InvalidConfig("SupportSet: index out of range");
      if (i > 0 && indices_[i] == indices_[i - 1])
        throw InvalidConfig("SupportSet: duplicate index");
    }
  }

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  int dimension() const { return p_; }
  bool contains(int j) const {
    return std::binary_search(indices_.begin(), indices_.end(), j);
  }

  bool operator==(const SupportSet& o) const { return p_ == o.p_ && indices_ == o.indices_; }

 private:
  std::vector<int> indices_;
  int p_ = 0;
};

/// L1-penalized least squares solution at a single penalty level.
/// The objective is ||y - X b||^2 + lambda * ||b||_1.
struct LassoFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  /// Coordinate sweeps performed.
  int n_iters = 0;
  /// Stationarity certificate: max over coordinates of the subgradient
  /// residual; every returned fit satisfies kkt_violation <= tol.
  double kkt_violation = 0.0;
  double objective = 0.0;
};

enum class Stage2Kind { mls, ridge, ols };

/// Output of a select-then-reestimate procedure: support chosen in stage
/// one, coefficients refit on that support in stage two, zero elsewhere.
struct TwoStageEstimate {
  SupportSet support;
  Eigen::VectorXd beta;  // length p
  Stage2Kind kind = Stage2Kind::mls;
  double tau = 0.0;       // singular-value cutoff (mls)
  double mu = 0.0;        // ridge level (ridge)
  int kept_rank = 0;      // singular values inverted (mls)
};

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace twostage
