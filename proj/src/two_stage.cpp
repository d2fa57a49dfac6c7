#include "twostage/two_stage.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

#include "cv_internal.hpp"

namespace twostage {

ThinSvd thin_svd(const Eigen::MatrixXd& A) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw FactorizationFailure("thin_svd: SVD did not converge");
  ThinSvd out;
  out.U = svd.matrixU();
  out.singular_values = svd.singularValues();
  out.V = svd.matrixV();
  return out;
}

SupportSet extract_support(const Eigen::VectorXd& beta, double zero_tol) {
  if (zero_tol < 0.0) throw InvalidConfig("extract_support: zero_tol must be nonnegative");
  std::vector<int> idx;
  for (int j = 0; j < beta.size(); ++j) {
    if (std::abs(beta[j]) > zero_tol) idx.push_back(j);
  }
  return SupportSet(std::move(idx), static_cast<int>(beta.size()));
}

namespace {

Eigen::MatrixXd support_columns(const RegressionDataset& ds, const SupportSet& S) {
  Eigen::MatrixXd Xs(ds.n(), S.size());
  for (int a = 0; a < S.size(); ++a) Xs.col(a) = ds.X.col(S.indices()[a]);
  return Xs;
}

void check_support(const RegressionDataset& ds, const SupportSet& S) {
  if (S.dimension() != ds.p())
    throw DimensionMismatch("two-stage refit: support dimension does not match design");
  if (S.size() > ds.n())
    throw TooFewSamples("two-stage refit: support larger than the sample size");
}

Eigen::VectorXd scatter(const Eigen::VectorXd& dense, const SupportSet& S) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(S.dimension());
  for (int a = 0; a < S.size(); ++a) beta[S.indices()[a]] = dense[a];
  return beta;
}

// Held-out squared error of the least-squares refit on `sup`. An empty
// support predicts zero. Singular normal equations get a tiny diagonal
// jitter and retry, so oversized supports score their interpolation error
// instead of aborting the whole curve.
double refit_holdout_sq(const Eigen::MatrixXd& Xtr, const Eigen::VectorXd& ytr,
                        const Eigen::MatrixXd& Xte, const Eigen::VectorXd& yte,
                        const std::vector<int>& sup) {
  const int d = static_cast<int>(sup.size());
  if (d == 0) return yte.squaredNorm();

  Eigen::MatrixXd A(Xtr.rows(), d), B(Xte.rows(), d);
  for (int a = 0; a < d; ++a) {
    A.col(a) = Xtr.col(sup[a]);
    B.col(a) = Xte.col(sup[a]);
  }
  Eigen::MatrixXd G = A.transpose() * A;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    G.diagonal().array() += 1e-8 * G.trace() / static_cast<double>(d);
    llt.compute(G);
    if (llt.info() != Eigen::Success)
      throw FactorizationFailure("cross_validate_with_refit: normal equations failed");
  }
  Eigen::VectorXd coef = llt.solve(A.transpose() * ytr);
  return (yte - B * coef).squaredNorm();
}

}  // namespace

PathCv cross_validate_with_refit(const RegressionDataset& ds, const LambdaGrid& grid, int k,
                                 std::uint64_t seed, const SolverOptions& opts) {
  const int n = ds.n(), p = ds.p();
  const int L = static_cast<int>(grid.values.size());
  if (L == 0) throw InvalidConfig("cross_validate_with_refit: empty grid");
  if (k < 2) throw InvalidConfig("cross_validate_with_refit: need at least two folds");
  if (k > n) throw TooFewSamples("cross_validate_with_refit: more folds than rows");

  PathCv out;
  out.lasso.grid = grid;
  out.lasso.k = k;
  out.lasso.fold_of_row = detail::fold_assignment(n, k, seed);

  std::vector<std::vector<double>> lasso_sq(k, std::vector<double>(L, 0.0));
  std::vector<std::vector<double>> refit_sq(k, std::vector<double>(L, 0.0));
  std::vector<int> fold_size(k, 0);
  for (int i = 0; i < n; ++i) ++fold_size[out.lasso.fold_of_row[i]];

  for (int f = 0; f < k; ++f) {
    const int n_te = fold_size[f];
    const int n_tr = n - n_te;
    Eigen::MatrixXd Xtr(n_tr, p), Xte(n_te, p);
    Eigen::VectorXd ytr(n_tr), yte(n_te);
    int it = 0, iv = 0;
    for (int i = 0; i < n; ++i) {
      if (out.lasso.fold_of_row[i] == f) {
        Xte.row(iv) = ds.X.row(i);
        yte[iv++] = ds.y[i];
      } else {
        Xtr.row(it) = ds.X.row(i);
        ytr[it++] = ds.y[i];
      }
    }

    const Eigen::VectorXd* warm = nullptr;
    Eigen::VectorXd warm_beta;
    for (int l = 0; l < L; ++l) {
      LassoFit fit = fit_lasso(Xtr, ytr, grid.values[l], warm, opts);
      if (fit.kkt_violation > out.lasso.max_kkt_violation)
        out.lasso.max_kkt_violation = fit.kkt_violation;

      std::vector<int> sup;
      Eigen::VectorXd pred = Eigen::VectorXd::Zero(n_te);
      for (int j = 0; j < p; ++j) {
        if (fit.beta[j] != 0.0) {
          pred += fit.beta[j] * Xte.col(j);
          sup.push_back(j);
        }
      }
      lasso_sq[f][l] = (yte - pred).squaredNorm();
      refit_sq[f][l] = refit_holdout_sq(Xtr, ytr, Xte, yte, sup);

      warm_beta = std::move(fit.beta);
      warm = &warm_beta;
    }
  }

  out.refit.grid = grid;
  out.refit.k = k;
  out.refit.fold_of_row = out.lasso.fold_of_row;
  out.refit.max_kkt_violation = out.lasso.max_kkt_violation;
  detail::finish_cv_curve(out.lasso, lasso_sq, fold_size, n, k);
  detail::finish_cv_curve(out.refit, refit_sq, fold_size, n, k);
  return out;
}

TwoStageEstimate fit_mls(const RegressionDataset& ds, const SupportSet& S, double tau) {
  check_support(ds, S);
  const int n = ds.n();
  if (tau < 0.0) tau = 1.0 / static_cast<double>(n);

  TwoStageEstimate est;
  est.support = S;
  est.kind = Stage2Kind::mls;
  est.tau = tau;
  est.beta = Eigen::VectorXd::Zero(ds.p());
  if (S.empty()) return est;

  const double root_n = std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd A = support_columns(ds, S) / root_n;
  ThinSvd svd = thin_svd(A);

  const int d = static_cast<int>(svd.singular_values.size());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(d);
  int kept = 0;
  for (int k = 0; k < d; ++k) {
    double s = svd.singular_values[k];
    if (s >= tau && s > 0.0) {
      inv[k] = 1.0 / s;
      ++kept;
    }
  }
  est.kept_rank = kept;

  Eigen::VectorXd dense =
      (svd.V * inv.asDiagonal() * (svd.U.transpose() * ds.y)) / root_n;
  est.beta = scatter(dense, S);
  return est;
}

TwoStageEstimate fit_ridge_after(const RegressionDataset& ds, const SupportSet& S, double mu) {
  check_support(ds, S);
  const int n = ds.n();
  if (mu < 0.0) mu = 1.0 / static_cast<double>(n);

  TwoStageEstimate est;
  est.support = S;
  est.kind = Stage2Kind::ridge;
  est.mu = mu;
  est.beta = Eigen::VectorXd::Zero(ds.p());
  if (S.empty()) return est;

  Eigen::MatrixXd Xs = support_columns(ds, S);
  const int d = S.size();

  if (mu == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
    if (qr.rank() < d)
      throw SingularSystem("fit_ridge_after: singular system with mu == 0");
    est.beta = scatter(qr.solve(ds.y), S);
    return est;
  }

  Eigen::MatrixXd G = Xs.transpose() * Xs;
  G.diagonal().array() += mu;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw FactorizationFailure("fit_ridge_after: Cholesky factorization failed");
  est.beta = scatter(llt.solve(Xs.transpose() * ds.y), S);
  return est;
}

TwoStageFit fit_two_stage(const RegressionDataset& ds, const SelectionConfig& sel,
                          const Stage2Config& s2, std::uint64_t seed) {
  TwoStageFit out;
  SupportSet S;

  switch (sel.kind) {
    case SelectorKind::lasso_fixed: {
      LassoFit fit = fit_lasso(ds, sel.lambda, nullptr, sel.solver);
      out.max_kkt_violation = fit.kkt_violation;
      out.lambda_used = sel.lambda;
      out.stage1_beta = std::move(fit.beta);
      S = extract_support(out.stage1_beta, sel.zero_tol);
      break;
    }
    case SelectorKind::lasso_cv: {
      LambdaGrid grid = lambda_grid(ds, sel.n_lambda, sel.lambda_ratio);
      PathCv cv = cross_validate_with_refit(ds, grid, sel.cv_folds, seed, sel.solver);

      const Eigen::VectorXd* warm = nullptr;
      Eigen::VectorXd warm_beta;
      LassoFit chosen;
      for (int l = 0; l <= cv.refit.selected_index(sel.cv_rule); ++l) {
        chosen = fit_lasso(ds.X, ds.y, grid.values[l], warm, sel.solver);
        if (chosen.kkt_violation > cv.refit.max_kkt_violation)
          cv.refit.max_kkt_violation = chosen.kkt_violation;
        warm_beta = chosen.beta;
        warm = &warm_beta;
      }
      out.max_kkt_violation = cv.refit.max_kkt_violation;
      out.lambda_used = chosen.lambda;
      out.stage1_beta = std::move(chosen.beta);
      out.cv = std::move(cv.refit);
      S = extract_support(out.stage1_beta, sel.zero_tol);
      break;
    }
    case SelectorKind::stability: {
      LambdaGrid grid = lambda_grid(ds, sel.stability.n_lambda, sel.stability.lambda_ratio);
      SelectionProfile prof =
          selection_profile(ds, grid.values, sel.stability, seed, sel.solver);
      S = stable_set(prof, sel.stability.pi_thr);
      out.stage1_beta = Eigen::VectorXd::Zero(ds.p());
      break;
    }
  }

  switch (s2.kind) {
    case Stage2Kind::mls:
      out.estimate = fit_mls(ds, S, s2.tau);
      break;
    case Stage2Kind::ridge:
      out.estimate = fit_ridge_after(ds, S, s2.mu);
      break;
    case Stage2Kind::ols:
      out.estimate = fit_mls(ds, S, 0.0);
      out.estimate.kind = Stage2Kind::ols;
      out.estimate.tau = 0.0;
      break;
  }
  return out;
}

}  // namespace twostage
