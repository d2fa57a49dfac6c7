#include "twostage/diagnostics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "twostage/parallel.hpp"
#include "twostage/rng.hpp"
#include "twostage/stats.hpp"

namespace twostage {

namespace {

Eigen::MatrixXd support_columns(const RegressionDataset& ds, const SupportSet& S) {
  Eigen::MatrixXd Xs(ds.n(), S.size());
  for (int a = 0; a < S.size(); ++a) Xs.col(a) = ds.X.col(S.indices()[a]);
  return Xs;
}

}  // namespace

double c11_min_eigenvalue(const RegressionDataset& ds, const SupportSet& S) {
  if (S.dimension() != ds.p())
    throw DimensionMismatch("c11_min_eigenvalue: support dimension mismatch");
  if (S.empty()) throw InvalidConfig("c11_min_eigenvalue: empty support");
  Eigen::MatrixXd Xs = support_columns(ds, S);
  Eigen::MatrixXd C11 = (Xs.transpose() * Xs) / static_cast<double>(ds.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C11, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw FactorizationFailure("c11_min_eigenvalue: eigen solve failed");
  return std::max(0.0, es.eigenvalues().minCoeff());
}

double support_row_mass(const RegressionDataset& ds, const SupportSet& S) {
  if (S.dimension() != ds.p())
    throw DimensionMismatch("support_row_mass: support dimension mismatch");
  double worst = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    double acc = 0.0;
    for (int j : S.indices()) acc += ds.X(i, j) * ds.X(i, j);
    worst = std::max(worst, acc);
  }
  return worst / std::sqrt(static_cast<double>(ds.n()));
}

IcReport irrepresentable_check(const RegressionDataset& ds, const SupportSet& S,
                               const Eigen::VectorXd& signs) {
  if (S.dimension() != ds.p())
    throw DimensionMismatch("irrepresentable_check: support dimension mismatch");
  if (signs.size() != S.size())
    throw DimensionMismatch("irrepresentable_check: signs length != |S|");
  for (int a = 0; a < signs.size(); ++a) {
    if (signs[a] != 1.0 && signs[a] != -1.0)
      throw InvalidConfig("irrepresentable_check: signs must be +1 or -1");
  }

  const int p = ds.p(), d = S.size();
  const double n = static_cast<double>(ds.n());

  IcReport rep;
  for (int j = 0; j < p; ++j) {
    if (!S.contains(j)) rep.checked.push_back(j);
  }
  const int m = static_cast<int>(rep.checked.size());
  rep.margins.resize(m);

  Eigen::VectorXd w;  // C11^{-1} signs
  if (d > 0) {
    Eigen::MatrixXd Xs = support_columns(ds, S);
    Eigen::MatrixXd C11 = (Xs.transpose() * Xs) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C11);
    if (es.info() != Eigen::Success)
      throw FactorizationFailure("irrepresentable_check: eigen solve failed");
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (lo <= hi * 1e-12)
      throw SingularC11("irrepresentable_check: restricted Gram block is singular");
    w = es.eigenvectors() *
        (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * signs));

    Eigen::VectorXd xs_w = Xs * w;
    for (int i = 0; i < m; ++i) {
      double c21w = ds.X.col(rep.checked[i]).dot(xs_w) / n;
      rep.margins[i] = 1.0 - std::abs(c21w);
    }
  } else {
    rep.margins.setOnes(m);
  }

  rep.eta_min = m > 0 ? rep.margins.minCoeff() : 1.0;
  rep.holds = rep.eta_min > 0.0;
  return rep;
}

double sign_consistency_rate(const SignConsistencySettings& settings, int n_reps,
                             std::uint64_t seed, int workers) {
  if (n_reps < 1) throw InvalidConfig("sign_consistency_rate: n_reps must be positive");
  if (settings.X.cols() != settings.beta_true.size())
    throw DimensionMismatch("sign_consistency_rate: beta_true length != p");
  const int n = static_cast<int>(settings.X.rows());
  const int p = static_cast<int>(settings.X.cols());

  Eigen::VectorXd mu = settings.X * settings.beta_true;
  std::vector<char> match(n_reps, 0);

  parallel_for(n_reps, workers, [&](int r) {
    Rng rng = make_stream(seed, Stream::noise, static_cast<std::uint64_t>(r));
    RegressionDataset ds;
    ds.X = settings.X;
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) ds.y[i] = mu[i] + settings.sigma * rng.normal();

    Eigen::VectorXd beta;
    if (settings.use_cv) {
      std::uint64_t cv_seed = derive_seed(seed, Stream::folds, static_cast<std::uint64_t>(r));
      beta = fit_lasso_cv(ds, settings.n_lambda, settings.lambda_ratio, settings.cv_folds,
                          cv_seed, settings.cv_rule, settings.solver)
                 .beta;
    } else {
      beta = fit_lasso(ds, settings.lambda_fixed, nullptr, settings.solver).beta;
    }

    bool all = true;
    for (int j = 0; j < p; ++j) {
      if (sign_of(beta[j]) != sign_of(settings.beta_true[j])) {
        all = false;
        break;
      }
    }
    match[r] = all ? 1 : 0;
  });

  int hits = 0;
  for (char c : match) hits += c;
  return static_cast<double>(hits) / static_cast<double>(n_reps);
}

double qq_normality_score(const std::vector<double>& draws) {
  if (draws.size() < 20) throw InvalidConfig("qq_normality_score: need at least 20 draws");
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw DegenerateDraws("qq_normality_score: all draws identical");
  const std::size_t m = sorted.size();
  std::vector<double> ref(m);
  for (std::size_t i = 0; i < m; ++i)
    ref[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(m));
  return pearson_correlation(sorted, ref);
}

}  // namespace twostage
