#include "twostage/lasso.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

#include "cv_internal.hpp"
#include "twostage/rng.hpp"

namespace twostage {

namespace {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Residual accumulated over nonzero coordinates in ascending order. The
// solver's certificate pass and the public kkt_max_violation both use this,
// so the stored violation and any later recomputation agree bit for bit.
Eigen::VectorXd residual_given(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta) {
  Eigen::VectorXd r = y;
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) r -= beta[j] * X.col(j);
  }
  return r;
}

double kkt_from_gradient(const Eigen::VectorXd& g, const Eigen::VectorXd& beta, double lambda) {
  double worst = 0.0;
  for (int j = 0; j < beta.size(); ++j) {
    double gj = 2.0 * g[j];
    double v;
    if (beta[j] != 0.0)
      v = std::abs(gj - lambda * sign_of(beta[j]));
    else
      v = std::max(0.0, std::abs(gj) - lambda);
    if (v > worst) worst = v;
  }
  return worst;
}

// Exact active-set descent used when cyclic updates stall. Repeatedly solves
// the normal equations restricted to the current signed support; when the
// solution leaves its sign orthant, steps to the first zero crossing and
// drops the crossed coordinate, otherwise accepts it and admits the worst
// stationarity violator. A support wider than the design rank makes the
// restriction singular; the sign vector then has a component in the null
// space of the restricted design, and sliding against it lowers the penalty
// at constant residual until a coordinate crosses zero, exchanging it out of
// the support. Saturated solves near the bottom of a penalty grid converge
// here in a few support changes where sweeps need millions of updates.
// Returns whether beta changed; certification stays with the caller's
// certificate pass.
bool sign_pattern_descent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          double tol, Eigen::VectorXd& beta) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const double half_lambda = lambda / 2.0;

  std::vector<int> A;
  std::vector<double> s;
  auto rebuild = [&]() {
    A.clear();
    s.clear();
    for (int j = 0; j < p; ++j) {
      if (beta[j] != 0.0) {
        A.push_back(j);
        s.push_back(sign_of(beta[j]));
      }
    }
  };
  rebuild();

  auto objective = [&](const Eigen::VectorXd& b) {
    return residual_given(X, y, b).squaredNorm() + lambda * b.template lpNorm<1>();
  };
  double f_cur = objective(beta);
  // Near the optimum true decreases fall below rounding; a step measuring
  // flat within this slack is still worth a certificate check.
  const double f_slack = 1e-10 * (1.0 + std::abs(f_cur));
  bool changed = false;
  std::vector<char> banned(static_cast<std::size_t>(p), 0);

  for (int iter = 0; iter < 100; ++iter) {
    const int d = static_cast<int>(A.size());
    if (d == 0) return changed;

    Eigen::MatrixXd Xa(n, d);
    Eigen::VectorXd sv(d);
    for (int a = 0; a < d; ++a) {
      Xa.col(a) = X.col(A[a]);
      sv[a] = s[static_cast<std::size_t>(a)];
    }

    Eigen::VectorXd bd;
    bool have_bd = false;
    if (d <= n) {
      Eigen::MatrixXd G = Xa.transpose() * Xa;
      Eigen::VectorXd rhs = Xa.transpose() * y - half_lambda * sv;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
      if (ldlt.info() == Eigen::Success) {
        bd = ldlt.solve(rhs);
        have_bd = bd.allFinite() && (G * bd - rhs).cwiseAbs().maxCoeff() <=
                                        1e-6 * (1.0 + rhs.cwiseAbs().maxCoeff());
      }
    }

    if (!have_bd) {
      // Exchange pivot. w is the null-space component of the sign vector,
      // so beta - t*w keeps the residual fixed while the penalty falls at
      // rate lambda*|w|^2; stop at the first sign-side zero crossing.
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Xa);
      Eigen::VectorXd w = sv - cod.solve(Xa * sv);
      if (w.squaredNorm() <= 1e-20 * d) return changed;
      double t_min = 0.0;
      int cross = -1;
      for (int a = 0; a < d; ++a) {
        double cur = beta[A[a]];
        if (cur == 0.0 || w[a] * sv[a] <= 0.0) continue;
        double t = cur / w[a];
        if (cross < 0 || t < t_min) {
          t_min = t;
          cross = a;
        }
      }
      if (cross < 0) return changed;
      Eigen::VectorXd cand = beta;
      for (int a = 0; a < d; ++a) {
        double cur = beta[A[a]];
        double v = cur - t_min * w[a];
        // A coordinate admitted at zero moves freely; established ones at
        // or past their crossing leave the support exactly.
        cand[A[a]] = (cur == 0.0 || v * sv[a] > 0.0) ? v : 0.0;
      }
      cand[A[cross]] = 0.0;
      double f_new = objective(cand);
      if (f_new >= f_cur) return changed;
      beta = std::move(cand);
      f_cur = f_new;
      changed = true;
      rebuild();
      continue;
    }

    bool flip_nonzero = false;
    bool flip_zero = false;
    for (int a = 0; a < d; ++a) {
      if (bd[a] * sv[a] <= 0.0) {
        if (beta[A[a]] != 0.0)
          flip_nonzero = true;
        else
          flip_zero = true;
      }
    }

    if (flip_nonzero) {
      // First zero crossing along the segment from beta to the solution.
      double t_min = 2.0;
      int cross = -1;
      for (int a = 0; a < d; ++a) {
        if (bd[a] * sv[a] <= 0.0) {
          double cur = beta[A[a]];
          if (cur == 0.0) continue;
          double t = cur / (cur - bd[a]);
          if (t < t_min) {
            t_min = t;
            cross = a;
          }
        }
      }
      if (!(t_min > 1e-14 && t_min <= 1.0)) return changed;

      Eigen::VectorXd cand = beta;
      for (int a = 0; a < d; ++a) {
        double v = beta[A[a]] + t_min * (bd[a] - beta[A[a]]);
        // Coordinates at or past their crossing leave the support exactly.
        cand[A[a]] = (v * sv[a] > 0.0) ? v : 0.0;
      }
      cand[A[cross]] = 0.0;
      double f_new = objective(cand);
      if (f_new >= f_cur + f_slack) return changed;
      beta = std::move(cand);
      f_cur = f_new;
      changed = true;
      rebuild();
      continue;
    }
    if (flip_zero) {
      // The solve rejects a coordinate admitted at zero before it ever
      // enters; shelve it for this call and retry with the next violator.
      for (int a = 0; a < d; ++a) {
        if (beta[A[a]] == 0.0 && bd[a] * sv[a] <= 0.0) banned[A[a]] = 1;
      }
      rebuild();
      continue;
    }

    Eigen::VectorXd cand = Eigen::VectorXd::Zero(p);
    for (int a = 0; a < d; ++a) cand[A[a]] = bd[a];
    double f_new = objective(cand);
    if (f_new > f_cur + f_slack) return changed;
    if ((cand.array() != beta.array()).any()) changed = true;
    beta = std::move(cand);
    f_cur = f_new;

    Eigen::VectorXd g = X.transpose() * residual_given(X, y, beta);
    if (kkt_from_gradient(g, beta, lambda) <= tol) return changed;
    int worst_j = -1;
    double worst_v = tol;
    for (int j = 0; j < p; ++j) {
      if (beta[j] != 0.0 || banned[j]) continue;
      double v = std::abs(2.0 * g[j]) - lambda;
      if (v > worst_v) {
        worst_v = v;
        worst_j = j;
      }
    }
    if (worst_j < 0) return changed;  // residual violation sits on the support
    A.push_back(worst_j);
    s.push_back(sign_of(g[worst_j]));
  }
  return changed;
}

}  // namespace

double kkt_max_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta, double lambda) {
  if (X.rows() != y.size() || X.cols() != beta.size())
    throw DimensionMismatch("kkt_max_violation: shape mismatch");
  Eigen::VectorXd r = residual_given(X, y, beta);
  Eigen::VectorXd g = X.transpose() * r;
  return kkt_from_gradient(g, beta, lambda);
}

LambdaGrid lambda_grid(const RegressionDataset& ds, int n_lambda, double ratio) {
  if (ds.X.rows() != ds.y.size()) throw DimensionMismatch("lambda_grid: shape mismatch");
  if (n_lambda < 1) throw InvalidConfig("lambda_grid: n_lambda must be positive");
  if (ratio <= 0.0) ratio = (ds.p() > ds.n()) ? 1e-3 : 1e-4;
  if (ratio >= 1.0) throw InvalidRatio("lambda_grid: ratio must lie in (0, 1)");

  double lambda_max = 2.0 * (ds.X.transpose() * ds.y).cwiseAbs().maxCoeff();
  if (lambda_max == 0.0)
    throw DegenerateGrid("lambda_grid: X'y is zero, every penalty level is equivalent");

  LambdaGrid grid;
  grid.lambda_max = lambda_max;
  grid.ratio = ratio;
  grid.values.resize(n_lambda);
  if (n_lambda == 1) {
    grid.values[0] = lambda_max;
    return grid;
  }
  const double step = std::log(ratio) / static_cast<double>(n_lambda - 1);
  for (int i = 0; i < n_lambda; ++i)
    grid.values[i] = lambda_max * std::exp(step * static_cast<double>(i));
  return grid;
}

LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const Eigen::VectorXd* init, const SolverOptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n != y.size()) throw DimensionMismatch("fit_lasso: X rows != y length");
  if (lambda < 0.0) throw InvalidConfig("fit_lasso: lambda must be nonnegative");
  if (init && init->size() != p) throw DimensionMismatch("fit_lasso: init length != p");

  Eigen::VectorXd colsq(p);
  for (int j = 0; j < p; ++j) colsq[j] = X.col(j).squaredNorm();

  Eigen::VectorXd beta = init ? *init : Eigen::VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) {
    // A zero column never helps the fit; pin its coefficient.
    if (colsq[j] == 0.0) beta[j] = 0.0;
  }

  std::vector<int> active;
  active.reserve(64);
  for (int j = 0; j < p; ++j) {
    if (beta[j] != 0.0) active.push_back(j);
  }

  const double half_lambda = lambda / 2.0;
  int sweeps = 0;
  int recoveries = 0;
  double inner_tol = 0.25 * opts.tol;

  for (;;) {
    // Certificate pass over all coordinates; also refreshes the residual
    // so incremental drift cannot accumulate across restarts.
    Eigen::VectorXd r = residual_given(X, y, beta);
    Eigen::VectorXd g = X.transpose() * r;
    double kkt = kkt_from_gradient(g, beta, lambda);

    if (kkt <= opts.tol) {
      LassoFit fit;
      fit.beta = std::move(beta);
      fit.lambda = lambda;
      fit.n_iters = sweeps;
      fit.kkt_violation = kkt;
      fit.objective = r.squaredNorm() + lambda * fit.beta.template lpNorm<1>();
      return fit;
    }
    if (sweeps >= opts.max_sweeps) {
      LassoFit best;
      best.beta = beta;
      best.lambda = lambda;
      best.n_iters = sweeps;
      best.kkt_violation = kkt;
      best.objective = r.squaredNorm() + lambda * beta.template lpNorm<1>();
      throw MaxItersExceeded(std::move(best),
                             "fit_lasso: sweep budget exhausted with violation " +
                                 std::to_string(kkt));
    }

    // Merge coordinates violating stationarity into the active set.
    std::vector<int> merged;
    merged.reserve(active.size() + 8);
    {
      std::size_t ai = 0;
      for (int j = 0; j < p; ++j) {
        bool was_active = ai < active.size() && active[ai] == j;
        if (was_active) ++ai;
        double gj = 2.0 * g[j];
        double v = beta[j] != 0.0 ? std::abs(gj - lambda * sign_of(beta[j]))
                                  : std::max(0.0, std::abs(gj) - lambda);
        if (was_active || v > opts.tol) merged.push_back(j);
      }
    }
    bool grew = merged.size() > active.size();
    active = std::move(merged);
    // If the active set did not grow, the violation sits inside it and the
    // inner loop needs a tighter exit to make progress.
    if (!grew) inner_tol *= 0.25;

    // A solve that is either stuck inside its active set or already slow
    // hands over to the exact active-set descent. When it moves beta, the
    // next certificate pass re-checks from the new point. Capped so the
    // sweep budget stays the sole termination authority.
    if ((!grew || sweeps >= 200) && recoveries < 50 &&
        sign_pattern_descent(X, y, lambda, opts.tol, beta)) {
      ++recoveries;
      active.clear();
      for (int j = 0; j < p; ++j) {
        if (beta[j] != 0.0) active.push_back(j);
      }
      continue;
    }

    // Cyclic updates over the active set until updates stall. The update
    // magnitude scaled by 2 z_j equals that coordinate's pre-update
    // stationarity residual, so stalling means the set is near-optimal.
    // Long inner runs are interrupted so the certificate pass and the
    // active-set descent get regular turns.
    int inner_sweeps = 0;
    for (;;) {
      double max_update = 0.0;
      for (int j : active) {
        const double zj = colsq[j];
        if (zj == 0.0) continue;
        double rho = X.col(j).dot(r) + zj * beta[j];
        double bnew = soft_threshold(rho, half_lambda) / zj;
        double delta = bnew - beta[j];
        if (delta != 0.0) {
          r -= delta * X.col(j);
          beta[j] = bnew;
          double upd = 2.0 * zj * std::abs(delta);
          if (upd > max_update) max_update = upd;
        }
      }
      ++sweeps;
      ++inner_sweeps;
      if (max_update <= inner_tol || inner_sweeps >= 1000 || sweeps >= opts.max_sweeps) break;
    }

    // Drop coordinates that fell back to zero before the next pass.
    std::vector<int> kept;
    kept.reserve(active.size());
    for (int j : active) {
      if (beta[j] != 0.0) kept.push_back(j);
    }
    active = std::move(kept);
  }
}

std::vector<LassoFit> fit_lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const LambdaGrid& grid, const SolverOptions& opts) {
  std::vector<LassoFit> fits;
  fits.reserve(grid.values.size());
  const Eigen::VectorXd* warm = nullptr;
  for (double lambda : grid.values) {
    fits.push_back(fit_lasso(X, y, lambda, warm, opts));
    warm = &fits.back().beta;
  }
  return fits;
}

CvResult cross_validate(const RegressionDataset& ds, const LambdaGrid& grid, int k,
                        std::uint64_t seed, const SolverOptions& opts) {
  const int n = ds.n(), p = ds.p();
  const int L = static_cast<int>(grid.values.size());
  if (L == 0) throw InvalidConfig("cross_validate: empty grid");
  if (k < 2) throw InvalidConfig("cross_validate: need at least two folds");
  if (k > n) throw TooFewSamples("cross_validate: more folds than rows");

  CvResult cv;
  cv.grid = grid;
  cv.k = k;
  cv.fold_of_row = detail::fold_assignment(n, k, seed);

  std::vector<std::vector<double>> fold_sq(k, std::vector<double>(L, 0.0));
  std::vector<int> fold_size(k, 0);
  for (int i = 0; i < n; ++i) ++fold_size[cv.fold_of_row[i]];

  for (int f = 0; f < k; ++f) {
    const int n_te = fold_size[f];
    const int n_tr = n - n_te;
    Eigen::MatrixXd Xtr(n_tr, p), Xte(n_te, p);
    Eigen::VectorXd ytr(n_tr), yte(n_te);
    int it = 0, iv = 0;
    for (int i = 0; i < n; ++i) {
      if (cv.fold_of_row[i] == f) {
        Xte.row(iv) = ds.X.row(i);
        yte[iv++] = ds.y[i];
      } else {
        Xtr.row(it) = ds.X.row(i);
        ytr[it++] = ds.y[i];
      }
    }

    const Eigen::VectorXd* warm = nullptr;
    std::vector<Eigen::VectorXd> warm_store(1);
    for (int l = 0; l < L; ++l) {
      LassoFit fit = fit_lasso(Xtr, ytr, grid.values[l], warm, opts);
      if (fit.kkt_violation > cv.max_kkt_violation) cv.max_kkt_violation = fit.kkt_violation;
      // Held-out error accumulated via the sparse support.
      Eigen::VectorXd pred = Eigen::VectorXd::Zero(n_te);
      for (int j = 0; j < p; ++j) {
        if (fit.beta[j] != 0.0) pred += fit.beta[j] * Xte.col(j);
      }
      fold_sq[f][l] = (yte - pred).squaredNorm();
      warm_store[0] = std::move(fit.beta);
      warm = &warm_store[0];
    }
  }

  detail::finish_cv_curve(cv, fold_sq, fold_size, n, k);
  return cv;
}

LassoFit fit_lasso_cv(const RegressionDataset& ds, int n_lambda, double ratio, int k,
                      std::uint64_t seed, CvRule rule, const SolverOptions& opts,
                      CvResult* cv_out) {
  LambdaGrid grid = lambda_grid(ds, n_lambda, ratio);
  CvResult cv = cross_validate(ds, grid, k, seed, opts);

  const Eigen::VectorXd* warm = nullptr;
  Eigen::VectorXd warm_beta;
  LassoFit chosen;
  for (int l = 0; l <= cv.selected_index(rule); ++l) {
    chosen = fit_lasso(ds.X, ds.y, grid.values[l], warm, opts);
    if (chosen.kkt_violation > cv.max_kkt_violation)
      cv.max_kkt_violation = chosen.kkt_violation;
    warm_beta = chosen.beta;
    warm = &warm_beta;
  }
  if (cv_out) *cv_out = std::move(cv);
  return chosen;
}

}  // namespace twostage
