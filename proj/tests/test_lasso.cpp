#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracle_qp.hpp"
#include "twostage/dataset.hpp"
#include "twostage/lasso.hpp"
#include "twostage/rng.hpp"

using namespace twostage;

namespace {

// Column-standardized random design with a sparse truth; the workhorse
// instance generator for solver properties.
RegressionDataset make_instance(int n, int p, int s, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  RegressionDataset raw;
  raw.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) raw.X(i, j) = rng.normal();
  raw.y = Eigen::VectorXd::Zero(n);
  RegressionDataset ds = standardize(raw).ds;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < s && j < p; ++j) beta[j] = (j % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.25 * j);
  ds.y = ds.X * beta;
  for (int i = 0; i < n; ++i) ds.y[i] += sigma * rng.normal();
  ds.beta_true = beta;
  return ds;
}

double objective_of(const RegressionDataset& ds, const Eigen::VectorXd& beta, double lambda) {
  return (ds.y - ds.X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

}  // namespace

TEST_CASE("single-column solution matches the soft-threshold closed form") {
  RegressionDataset ds;
  ds.X.resize(4, 1);
  ds.X << 1, -1, 1, -1;  // centered, unit mean square
  ds.y.resize(4);
  ds.y << 2, 0, 1, 1;  // x'y = 2

  LassoFit f2 = fit_lasso(ds, 2.0);
  CHECK(f2.beta[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f2.objective == doctest::Approx(5.75).epsilon(1e-12));
  CHECK(f2.kkt_violation <= 1e-7);

  LassoFit f6 = fit_lasso(ds, 6.0);
  CHECK(f6.beta[0] == 0.0);

  // At exactly lambda_max = 2|x'y| = 4 the zero vector is optimal.
  LassoFit f4 = fit_lasso(ds, 4.0);
  CHECK(f4.beta[0] == 0.0);
}

TEST_CASE("kkt_max_violation at frozen points") {
  RegressionDataset ds;
  ds.X.resize(4, 1);
  ds.X << 1, -1, 1, -1;
  ds.y.resize(4);
  ds.y << 2, 0, 1, 1;

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(kkt_max_violation(ds.X, ds.y, zero, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
  // Inactive rule clips at zero once lambda dominates the gradient.
  CHECK(kkt_max_violation(ds.X, ds.y, zero, 6.0) == 0.0);

  Eigen::VectorXd sol(1);
  sol << 0.25;
  CHECK(kkt_max_violation(ds.X, ds.y, sol, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lambda_grid endpoints and defaults") {
  RegressionDataset ds;
  ds.X.resize(4, 1);
  ds.X << 1, -1, 1, -1;
  ds.y.resize(4);
  ds.y << 5, 0, 5, 0;  // x'y = 10, so lambda_max = 20

  LambdaGrid g = lambda_grid(ds, 3, 0.01);
  REQUIRE(g.values.size() == 3);
  CHECK(g.lambda_max == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(g.values[0] == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(g.values[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.values[2] == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS(lambda_grid(ds, 3, 1.0), InvalidRatio);
  CHECK_THROWS_AS(lambda_grid(ds, 0, 0.5), InvalidConfig);

  RegressionDataset null_ds = ds;
  null_ds.y.setZero();
  CHECK_THROWS_AS(lambda_grid(null_ds, 3, 0.5), DegenerateGrid);

  // Default ratio switches on the aspect: 1e-3 for p > n, 1e-4 otherwise.
  RegressionDataset wide = make_instance(10, 20, 2, 0.1, 5);
  CHECK(lambda_grid(wide, 5).ratio == doctest::Approx(1e-3));
  RegressionDataset tall = make_instance(20, 10, 2, 0.1, 6);
  CHECK(lambda_grid(tall, 5).ratio == doctest::Approx(1e-4));
}

TEST_CASE("solver agrees with exhaustive sign-pattern enumeration") {
  // 100 random small instances spanning shapes, penalties and collinearity.
  int compared = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng(1000 + t);
    int n = 3 + static_cast<int>(rng.below(10));
    int p = 1 + static_cast<int>(rng.below(6));
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    if (t % 5 == 0 && p >= 2) X.col(1) = X.col(0) * 0.9;  // near-collinear block
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 2.0 * rng.normal();

    double lmax = 2.0 * (X.transpose() * y).cwiseAbs().maxCoeff();
    double lambda = lmax * (0.02 + 0.9 * rng.uniform01());

    auto ref = oracle::lasso_by_enumeration(X, y, lambda);
    REQUIRE(ref.has_value());
    LassoFit fit = fit_lasso(X, y, lambda);
    CHECK(fit.kkt_violation <= 1e-7);
    CHECK((fit.beta - *ref).cwiseAbs().maxCoeff() < 1e-6);
    ++compared;
  }
  CHECK(compared == 100);
}

TEST_CASE("zero columns are pinned and ignored") {
  Rng rng(77);
  Eigen::MatrixXd X(8, 3);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
  X.col(1).setZero();
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) y[i] = rng.normal();

  Eigen::VectorXd init = Eigen::VectorXd::Constant(3, 0.5);
  LassoFit fit = fit_lasso(X, y, 0.3, &init);
  CHECK(fit.beta[1] == 0.0);
  CHECK(fit.kkt_violation <= 1e-7);
}

TEST_CASE("warm start does not change the solution") {
  RegressionDataset ds = make_instance(40, 60, 4, 0.5, 9);
  double lambda = lambda_grid(ds, 10).values[5];
  LassoFit cold = fit_lasso(ds, lambda);
  Eigen::VectorXd far = Eigen::VectorXd::Constant(60, 0.7);
  LassoFit warm = fit_lasso(ds, lambda, &far);
  CHECK((cold.beta - warm.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solution objective beats truth and zero") {
  RegressionDataset ds = make_instance(50, 80, 5, 0.5, 10);
  for (double lambda : {1.0, 10.0, 40.0}) {
    LassoFit fit = fit_lasso(ds, lambda);
    CHECK(fit.objective <= objective_of(ds, Eigen::VectorXd::Zero(80), lambda) + 1e-9);
    CHECK(fit.objective <= objective_of(ds, *ds.beta_true, lambda) + 1e-9);
    CHECK(fit.objective ==
          doctest::Approx(objective_of(ds, fit.beta, lambda)).epsilon(1e-10));
  }
}

TEST_CASE("path support grows as the penalty shrinks, roughly") {
  RegressionDataset ds = make_instance(60, 100, 5, 0.3, 12);
  LambdaGrid grid = lambda_grid(ds, 30);
  auto path = fit_lasso_path(ds.X, ds.y, grid);
  REQUIRE(path.size() == 30);
  // At lambda_max the solution is zero; by the end it is not.
  CHECK(path.front().beta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(path.back().beta.cwiseAbs().maxCoeff() > 0.0);
  for (const auto& f : path) CHECK(f.kkt_violation <= 1e-7);
  // Path continuity: consecutive solutions stay close in objective terms.
  for (std::size_t l = 1; l < path.size(); ++l) {
    double prev_at_cur =
        objective_of(ds, path[l - 1].beta, path[l].lambda);
    CHECK(path[l].objective <= prev_at_cur + 1e-9);
  }
}

TEST_CASE("max_sweeps failure carries the best iterate") {
  RegressionDataset ds = make_instance(40, 200, 8, 0.5, 13);
  SolverOptions opts;
  opts.max_sweeps = 2;
  double lambda = lambda_grid(ds, 10).values[8];
  try {
    fit_lasso(ds.X, ds.y, lambda, nullptr, opts);
    FAIL("expected MaxItersExceeded");
  } catch (const MaxItersExceeded& e) {
    CHECK(e.best.beta.size() == 200);
    CHECK(e.best.kkt_violation > 1e-7);
    CHECK(e.best.n_iters <= 3);
  }
}

TEST_CASE("cross validation is deterministic and pools fold errors") {
  RegressionDataset ds = make_instance(50, 30, 3, 0.5, 14);
  LambdaGrid grid = lambda_grid(ds, 20);
  CvResult a = cross_validate(ds, grid, 5, 99);
  CvResult b = cross_validate(ds, grid, 5, 99);
  CHECK(a.lambda_min == b.lambda_min);
  CHECK(a.cv_mean == b.cv_mean);
  CHECK(a.fold_of_row == b.fold_of_row);

  CvResult c = cross_validate(ds, grid, 5, 100);
  CHECK(a.fold_of_row != c.fold_of_row);

  // Near-equal fold sizes.
  std::vector<int> sizes(5, 0);
  for (int f : a.fold_of_row) ++sizes[f];
  for (int s : sizes) CHECK(std::abs(s - 10) <= 1);

  // Pooled mean equals total held-out squared error over n.
  for (double m : a.cv_mean) CHECK(m >= 0.0);
  CHECK(a.cv_se.size() == a.cv_mean.size());
  CHECK(a.lambda_min_index >= 0);

  // One-standard-error point: never below the minimizer, within the band.
  CHECK(a.lambda_1se_index >= 0);
  CHECK(a.lambda_1se_index <= a.lambda_min_index);
  CHECK(a.lambda_1se >= a.lambda_min);
  double band = a.cv_mean[a.lambda_min_index] + a.cv_se[a.lambda_min_index];
  CHECK(a.cv_mean[a.lambda_1se_index] <= band + 1e-12);
  for (int l = 0; l < a.lambda_1se_index; ++l) CHECK(a.cv_mean[l] > band);

  // Each rule's fit lands on its grid point.
  LassoFit fit_min = fit_lasso_cv(ds, 20, 0.0, 5, 99, CvRule::min);
  CHECK(fit_min.lambda == a.lambda_min);
  LassoFit fit_1se = fit_lasso_cv(ds, 20, 0.0, 5, 99);
  CHECK(fit_1se.lambda == a.lambda_1se);
}

TEST_CASE("cv tie rule prefers the larger penalty") {
  // A grid evaluated twice produces exact ties; the first (largest) index
  // must win. Simulate by duplicating one penalty value.
  RegressionDataset ds = make_instance(30, 10, 2, 0.3, 15);
  LambdaGrid grid = lambda_grid(ds, 10);
  LambdaGrid doubled = grid;
  doubled.values.insert(doubled.values.begin() + 3, grid.values[3] * (1.0 + 1e-15));
  CvResult cv = cross_validate(ds, doubled, 4, 7);
  if (cv.lambda_min_index >= 3 && cv.lambda_min_index <= 4) {
    // If the duplicated pair is optimal, index 3 (the larger value) wins.
    CHECK(cv.lambda_min_index == 3);
  }
  CHECK_THROWS_AS(cross_validate(ds, grid, 1, 7), InvalidConfig);
  CHECK_THROWS_AS(cross_validate(ds, grid, 31, 7), TooFewSamples);
}

TEST_CASE("cv recovers signal at reasonable noise") {
  RegressionDataset ds = make_instance(80, 40, 3, 0.5, 16);
  CvResult cv;
  LassoFit fit = fit_lasso_cv(ds, 50, 0.0, 5, 21, CvRule::one_se, {}, &cv);
  // True signals all selected.
  for (int j = 0; j < 3; ++j) CHECK(fit.beta[j] != 0.0);
  CHECK(cv.max_kkt_violation <= 1e-7);
}
