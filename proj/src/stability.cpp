#include "twostage/stability.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace twostage {

LassoFit fit_weighted_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                            const Eigen::VectorXd& weights, const Eigen::VectorXd* init,
                            const SolverOptions& opts) {
  const int p = static_cast<int>(X.cols());
  if (weights.size() != p) throw DimensionMismatch("fit_weighted_lasso: weights length != p");
  if ((weights.array() <= 0.0).any())
    throw InvalidConfig("fit_weighted_lasso: weights must be positive");

  Eigen::MatrixXd Xw = X;
  for (int j = 0; j < p; ++j) Xw.col(j) *= weights[j];

  Eigen::VectorXd init_scaled;
  const Eigen::VectorXd* init_ptr = nullptr;
  if (init) {
    if (init->size() != p) throw DimensionMismatch("fit_weighted_lasso: init length != p");
    init_scaled = init->cwiseQuotient(weights);
    init_ptr = &init_scaled;
  }

  LassoFit fit = fit_lasso(Xw, y, lambda, init_ptr, opts);
  // Map back to the original parametrization; the residual and hence the
  // objective value are unchanged by the rescaling.
  fit.beta = fit.beta.cwiseProduct(weights);
  return fit;
}

LassoFit fit_randomized_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                              double alpha, double p_w, Rng& rng, Eigen::VectorXd* weights_out,
                              const SolverOptions& opts) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InvalidConfig("fit_randomized_lasso: alpha must lie in (0, 1]");
  if (!(p_w >= 0.0 && p_w <= 1.0))
    throw InvalidConfig("fit_randomized_lasso: p_w must lie in [0, 1]");
  const int p = static_cast<int>(X.cols());
  Eigen::VectorXd w(p);
  for (int j = 0; j < p; ++j) w[j] = rng.uniform01() < p_w ? alpha : 1.0;
  if (weights_out) *weights_out = w;
  return fit_weighted_lasso(X, y, lambda, w, nullptr, opts);
}

SelectionProfile selection_profile(const RegressionDataset& ds,
                                   const std::vector<double>& lambda_values,
                                   const StabilityConfig& cfg, std::uint64_t seed,
                                   const SolverOptions& opts) {
  const int n = ds.n(), p = ds.p();
  const int L = static_cast<int>(lambda_values.size());
  if (L == 0) throw InvalidConfig("selection_profile: empty penalty grid");
  if (cfg.n_subsamples < 1) throw InvalidConfig("selection_profile: n_subsamples must be positive");
  if (n < 4) throw TooFewSamples("selection_profile: need at least four rows");

  const int m = n / 2;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(p, L);

  for (int d = 0; d < cfg.n_subsamples; ++d) {
    Rng rng_rows = make_stream(seed, Stream::subsample, static_cast<std::uint64_t>(d));
    std::vector<int> rows(m);
    if (cfg.with_replacement) {
      for (int i = 0; i < m; ++i) rows[i] = static_cast<int>(rng_rows.below(n));
    } else {
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      rng_rows.shuffle(perm);
      for (int i = 0; i < m; ++i) rows[i] = perm[i];
    }

    Rng rng_w = make_stream(seed, Stream::weights, static_cast<std::uint64_t>(d));
    Eigen::VectorXd w(p);
    for (int j = 0; j < p; ++j) w[j] = rng_w.uniform01() < cfg.p_w ? cfg.alpha : 1.0;

    Eigen::MatrixXd Xs(m, p);
    Eigen::VectorXd ys(m);
    for (int i = 0; i < m; ++i) {
      Xs.row(i) = ds.X.row(rows[i]);
      ys[i] = ds.y[rows[i]];
    }
    for (int j = 0; j < p; ++j) Xs.col(j) *= w[j];

    const Eigen::VectorXd* warm = nullptr;
    Eigen::VectorXd warm_beta;
    for (int l = 0; l < L; ++l) {
      LassoFit fit;
      try {
        fit = fit_lasso(Xs, ys, lambda_values[l], warm, opts);
      } catch (const MaxItersExceeded& e) {
        throw MaxItersExceeded(e.best, "selection_profile: subsample " + std::to_string(d) +
                                           ", penalty index " + std::to_string(l) + ": " +
                                           e.what());
      }
      for (int j = 0; j < p; ++j) {
        if (fit.beta[j] != 0.0) counts(j, l) += 1.0;
      }
      warm_beta = std::move(fit.beta);
      warm = &warm_beta;
    }
  }

  SelectionProfile prof;
  prof.pi = counts / static_cast<double>(cfg.n_subsamples);
  prof.lambda_values = lambda_values;
  prof.n_subsamples = cfg.n_subsamples;
  return prof;
}

SupportSet stable_set(const SelectionProfile& profile, double pi_thr) {
  if (!(pi_thr > 0.5 && pi_thr < 1.0))
    throw InvalidConfig("stable_set: threshold must lie in (0.5, 1)");
  const int p = static_cast<int>(profile.pi.rows());
  std::vector<int> idx;
  for (int j = 0; j < p; ++j) {
    if (profile.pi.row(j).maxCoeff() >= pi_thr) idx.push_back(j);
  }
  return SupportSet(std::move(idx), p);
}

namespace {

void subset_extremes(const Eigen::MatrixXd& X, const std::vector<int>& cols, double& smin,
                     double& smax) {
  const int m = static_cast<int>(cols.size());
  Eigen::MatrixXd G(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      double v = X.col(cols[a]).dot(X.col(cols[b]));
      G(a, b) = v;
      G(b, a) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw FactorizationFailure("sparse_eigenvalue_estimate: eigen solve failed");
  smin = std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
  smax = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

SparseEigenvalueEstimate sparse_eigenvalue_estimate(const Eigen::MatrixXd& X, double k,
                                                    int n_trials, std::uint64_t seed,
                                                    bool exact) {
  const int p = static_cast<int>(X.cols());
  const int m = static_cast<int>(std::ceil(k));
  if (m < 1 || m > p) throw InvalidConfig("sparse_eigenvalue_estimate: subset size out of range");

  SparseEigenvalueEstimate est;
  est.subset_size = m;
  est.exact = exact;
  double best_min = std::numeric_limits<double>::infinity();
  double best_max = 0.0;

  if (exact) {
    if (p > 20)
      throw InvalidConfig("sparse_eigenvalue_estimate: exact enumeration requires p <= 20");
    // Lexicographic enumeration of all size-m column subsets. Extremes over
    // subsets of size <= m are attained at size exactly m by interlacing.
    std::vector<int> cols(m);
    for (int i = 0; i < m; ++i) cols[i] = i;
    int count = 0;
    for (;;) {
      double smin, smax;
      subset_extremes(X, cols, smin, smax);
      best_min = std::min(best_min, smin);
      best_max = std::max(best_max, smax);
      ++count;
      int i = m - 1;
      while (i >= 0 && cols[i] == p - m + i) --i;
      if (i < 0) break;
      ++cols[i];
      for (int j = i + 1; j < m; ++j) cols[j] = cols[j - 1] + 1;
    }
    est.n_trials = count;
  } else {
    if (n_trials < 1) throw InvalidConfig("sparse_eigenvalue_estimate: n_trials must be positive");
    std::vector<int> perm(p);
    for (int t = 0; t < n_trials; ++t) {
      Rng rng = make_stream(seed, Stream::trial, static_cast<std::uint64_t>(t));
      for (int i = 0; i < p; ++i) perm[i] = i;
      rng.shuffle(perm);
      std::vector<int> cols(perm.begin(), perm.begin() + m);
      double smin, smax;
      subset_extremes(X, cols, smin, smax);
      best_min = std::min(best_min, smin);
      best_max = std::max(best_max, smax);
    }
    est.n_trials = n_trials;
  }

  est.phi_min = best_min;
  est.phi_max = best_max;
  return est;
}

}  // namespace twostage
