#include "twostage/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "twostage/parallel.hpp"
#include "twostage/rng.hpp"
#include "twostage/stats.hpp"

namespace twostage {

Eigen::VectorXd centered_residuals(const RegressionDataset& ds, const Eigen::VectorXd& beta) {
  if (beta.size() != ds.p()) throw DimensionMismatch("centered_residuals: beta length != p");
  Eigen::VectorXd r = ds.y;
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) r -= beta[j] * ds.X.col(j);
  }
  r.array() -= r.mean();
  return r;
}

namespace {

// One replicate's penalized refit plus optional second stage.
Eigen::VectorXd replicate_estimate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const RefitConfig& refit, const Eigen::VectorXd* warm,
                                   std::uint64_t cv_seed, double* kkt_out) {
  double lambda = refit.lambda;
  if (refit.re_cv) {
    RegressionDataset tmp;
    tmp.X = X;
    tmp.y = y;
    LambdaGrid grid = lambda_grid(tmp, refit.n_lambda, refit.lambda_ratio);
    if (refit.stage2) {
      // A second stage tunes on the curve that scores its own predictions.
      PathCv cv = cross_validate_with_refit(tmp, grid, refit.cv_folds, cv_seed, refit.solver);
      lambda = cv.refit.selected(refit.cv_rule);
    } else {
      CvResult cv = cross_validate(tmp, grid, refit.cv_folds, cv_seed, refit.solver);
      lambda = cv.selected(refit.cv_rule);
    }
  }

  LassoFit fit = fit_lasso(X, y, lambda, warm, refit.solver);
  *kkt_out = fit.kkt_violation;

  if (!refit.stage2) return fit.beta;

  RegressionDataset tmp;
  tmp.X = X;
  tmp.y = y;
  SupportSet S = extract_support(fit.beta, refit.zero_tol);
  switch (refit.stage2->kind) {
    case Stage2Kind::mls:
      return fit_mls(tmp, S, refit.stage2->tau).beta;
    case Stage2Kind::ridge:
      return fit_ridge_after(tmp, S, refit.stage2->mu).beta;
    case Stage2Kind::ols:
      return fit_mls(tmp, S, 0.0).beta;
  }
  throw InvalidConfig("replicate_estimate: unknown second stage");
}

}  // namespace

BootstrapEnsemble bootstrap_ensemble(const RegressionDataset& ds,
                                     const Eigen::VectorXd& point_beta, const RefitConfig& refit,
                                     int B, BootstrapMethod method, std::uint64_t seed,
                                     int workers) {
  const int n = ds.n(), p = ds.p();
  if (B < 1) throw InvalidConfig("bootstrap_ensemble: B must be positive");
  if (point_beta.size() != p) throw DimensionMismatch("bootstrap_ensemble: beta length != p");

  // Shared read-only state for the residual scheme.
  Eigen::VectorXd eps, fitted;
  if (method == BootstrapMethod::residual) {
    eps = centered_residuals(ds, point_beta);
    fitted = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < p; ++j) {
      if (point_beta[j] != 0.0) fitted += point_beta[j] * ds.X.col(j);
    }
  }

  const Eigen::VectorXd warm_default = point_beta;
  const Eigen::VectorXd& warm =
      refit.warm_start ? *refit.warm_start : warm_default;

  Eigen::MatrixXd rows(B, p);
  std::vector<char> ok(B, 0);
  std::vector<double> kkt(B, 0.0);

  parallel_for(B, workers, [&](int b) {
    Rng rng = make_stream(seed, Stream::bootstrap, static_cast<std::uint64_t>(b));
    std::uint64_t cv_seed = derive_seed(seed, Stream::folds, static_cast<std::uint64_t>(b));
    try {
      if (method == BootstrapMethod::residual) {
        Eigen::VectorXd ystar(n);
        for (int i = 0; i < n; ++i)
          ystar[i] = fitted[i] + eps[static_cast<int>(rng.below(n))];
        rows.row(b) = replicate_estimate(ds.X, ystar, refit, &warm, cv_seed, &kkt[b]);
      } else {
        Eigen::MatrixXd Xb(n, p);
        Eigen::VectorXd yb(n);
        for (int i = 0; i < n; ++i) {
          int r = static_cast<int>(rng.below(n));
          Xb.row(i) = ds.X.row(r);
          yb[i] = ds.y[r];
        }
        rows.row(b) = replicate_estimate(Xb, yb, refit, &warm, cv_seed, &kkt[b]);
      }
      ok[b] = 1;
    } catch (const MaxItersExceeded&) {
      ok[b] = 0;
    }
  });

  BootstrapEnsemble ens;
  ens.point_beta = point_beta;
  ens.B = B;
  ens.method = method;
  ens.lambda = refit.lambda;
  ens.n_rows = n;

  int n_ok = 0;
  for (int b = 0; b < B; ++b) {
    if (ok[b])
      ++n_ok;
    else
      ens.failed.push_back(b);
  }
  if (static_cast<double>(ens.failed.size()) > 0.01 * static_cast<double>(B))
    throw Error("bootstrap_ensemble: " + std::to_string(ens.failed.size()) + " of " +
                std::to_string(B) + " replicates failed to certify (over 1%)");

  ens.replicates.resize(n_ok, p);
  int r = 0;
  for (int b = 0; b < B; ++b) {
    if (ok[b]) {
      ens.replicates.row(r++) = rows.row(b);
      if (kkt[b] > ens.max_kkt_violation) ens.max_kkt_violation = kkt[b];
    }
  }
  return ens;
}

IntervalSet confidence_intervals(const BootstrapEnsemble& ens, double level, CiKind kind) {
  if (ens.replicates.rows() == 0) throw EmptyEnsemble("confidence_intervals: no replicates");
  if (!(level > 0.0 && level < 1.0))
    throw InvalidConfig("confidence_intervals: level must lie in (0, 1)");

  const int p = static_cast<int>(ens.replicates.cols());
  const int m = static_cast<int>(ens.replicates.rows());
  const double a = 1.0 - level;

  IntervalSet out;
  out.level = level;
  out.kind = kind;
  out.lower.resize(p);
  out.upper.resize(p);

  std::vector<double> col(m);
  for (int j = 0; j < p; ++j) {
    for (int b = 0; b < m; ++b) col[b] = ens.replicates(b, j);
    std::sort(col.begin(), col.end());
    double ql = quantile_type7(col, a / 2.0);
    double qh = quantile_type7(col, 1.0 - a / 2.0);
    if (kind == CiKind::percentile) {
      out.lower[j] = ql;
      out.upper[j] = qh;
    } else {
      out.lower[j] = 2.0 * ens.point_beta[j] - qh;
      out.upper[j] = 2.0 * ens.point_beta[j] - ql;
    }
  }
  return out;
}

double mallows_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw InvalidConfig("mallows_distance: empty sample");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const std::size_t m = std::max(sa.size(), sb.size());
  // Step-function quantiles at midpoints; reduces to the sorted pairing
  // when the sizes agree.
  auto q = [](const std::vector<double>& s, double u) {
    std::size_t i = static_cast<std::size_t>(std::ceil(u * static_cast<double>(s.size())));
    if (i == 0) i = 1;
    if (i > s.size()) i = s.size();
    return s[i - 1];
  };

  double acc = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    double u = (static_cast<double>(i) - 0.5) / static_cast<double>(m);
    double d = q(sa, u) - q(sb, u);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(m));
}

double mallows_check(const std::vector<double>& sampling_draws, const BootstrapEnsemble& ens,
                     int j) {
  if (ens.replicates.rows() == 0) throw EmptyEnsemble("mallows_check: no replicates");
  if (j < 0 || j >= ens.replicates.cols())
    throw InvalidConfig("mallows_check: coordinate out of range");
  if (ens.n_rows < 1) throw InvalidConfig("mallows_check: ensemble sample size unset");
  const double root_n = std::sqrt(static_cast<double>(ens.n_rows));
  std::vector<double> b(static_cast<std::size_t>(ens.replicates.rows()));
  for (int i = 0; i < ens.replicates.rows(); ++i)
    b[static_cast<std::size_t>(i)] = root_n * (ens.replicates(i, j) - ens.point_beta[j]);
  return mallows_distance(sampling_draws, b);
}

}  // namespace twostage
