#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "twostage/dataset.hpp"
#include "twostage/diagnostics.hpp"
#include "twostage/rng.hpp"

using namespace twostage;

namespace {

// Four-point design with exactly known Gram structure: the third column is
// 0.6 x1 + 0.8 x2 with x1, x2 orthogonal and unit mean square.
RegressionDataset known_gram() {
  RegressionDataset ds;
  ds.X.resize(4, 3);
  ds.X.col(0) << 1, 1, -1, -1;
  ds.X.col(1) << 1, -1, 1, -1;
  ds.X.col(2) << 1.4, -0.2, 0.2, -1.4;
  ds.y = Eigen::VectorXd::Zero(4);
  return ds;
}

}  // namespace

TEST_CASE("sign-condition margins on a known Gram matrix") {
  RegressionDataset ds = known_gram();
  SupportSet S({0, 1}, 3);

  Eigen::VectorXd signs(2);
  signs << 1, 1;
  IcReport rep = irrepresentable_check(ds, S, signs);
  REQUIRE(rep.checked == std::vector<int>{2});
  CHECK(rep.margins[0] == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(rep.eta_min == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(!rep.holds);

  signs << 1, -1;
  IcReport rep2 = irrepresentable_check(ds, S, signs);
  CHECK(rep2.margins[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(rep2.holds);

  Eigen::VectorXd bad(2);
  bad << 1, 0.5;
  CHECK_THROWS_AS(irrepresentable_check(ds, S, bad), InvalidConfig);
  Eigen::VectorXd wrong_len(3);
  wrong_len << 1, 1, 1;
  CHECK_THROWS_AS(irrepresentable_check(ds, S, wrong_len), DimensionMismatch);
}

TEST_CASE("empty and full supports are easy cases") {
  RegressionDataset ds = known_gram();
  IcReport rep = irrepresentable_check(ds, SupportSet({}, 3), Eigen::VectorXd(0));
  CHECK(rep.holds);
  CHECK(rep.margins.size() == 3);
  CHECK(rep.margins.minCoeff() == 1.0);

  // Full support: complement is empty, trivially holds.
  RegressionDataset two;
  two.X = ds.X.leftCols(2);
  two.y = ds.y;
  Eigen::VectorXd signs(2);
  signs << 1, 1;
  IcReport full = irrepresentable_check(two, SupportSet({0, 1}, 2), signs);
  CHECK(full.checked.empty());
  CHECK(full.holds);
  CHECK(full.eta_min == 1.0);
}

TEST_CASE("singular restricted Gram is rejected") {
  RegressionDataset ds = known_gram();
  Eigen::VectorXd signs(3);
  signs << 1, 1, 1;
  CHECK_THROWS_AS(irrepresentable_check(ds, SupportSet({0, 1, 2}, 3), signs), SingularC11);
}

TEST_CASE("restricted Gram minimum eigenvalue") {
  RegressionDataset ds = known_gram();
  CHECK(c11_min_eigenvalue(ds, SupportSet({0, 1}, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c11_min_eigenvalue(ds, SupportSet({0, 2}, 3)) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(c11_min_eigenvalue(ds, SupportSet({0, 1, 2}, 3)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(c11_min_eigenvalue(ds, SupportSet({}, 3)), InvalidConfig);
}

TEST_CASE("support row mass is the heaviest restricted row over root n") {
  RegressionDataset ds;
  ds.X.resize(2, 3);
  ds.X << 1, 2, 9, 3, 4, 9;
  ds.y = Eigen::VectorXd::Zero(2);
  // Rows restricted to {0, 1}: 1 + 4 = 5 and 9 + 16 = 25; n = 2.
  CHECK(support_row_mass(ds, SupportSet({0, 1}, 3)) ==
        doctest::Approx(25.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(support_row_mass(ds, SupportSet({}, 3)) == 0.0);
  CHECK_THROWS_AS(support_row_mass(ds, SupportSet({0}, 2)), DimensionMismatch);
}

TEST_CASE("sign consistency rate extremes") {
  Rng rng(101);
  const int n = 80, p = 15;
  RegressionDataset raw;
  raw.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) raw.X(i, j) = rng.normal();
  raw.y = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd X = standardize(raw).ds.X;

  SignConsistencySettings s;
  s.X = X;
  s.beta_true = Eigen::VectorXd::Zero(p);
  s.beta_true[0] = 2.0;
  s.beta_true[1] = -1.5;
  s.sigma = 0.2;
  s.use_cv = false;

  // Penalty far above every realized lambda_max: nothing selected, so the
  // sign vector never matches a nonzero truth.
  s.lambda_fixed = 1e9;
  CHECK(sign_consistency_rate(s, 10, 5) == 0.0);

  // Moderate penalty on a strong-signal problem: recovery nearly always.
  s.lambda_fixed = 30.0;
  double rate = sign_consistency_rate(s, 40, 5);
  CHECK(rate >= 0.9);

  // Deterministic in the seed, including across worker counts.
  CHECK(sign_consistency_rate(s, 40, 5) == rate);
  CHECK(sign_consistency_rate(s, 40, 5, 4) == rate);

  CHECK_THROWS_AS(sign_consistency_rate(s, 0, 5), InvalidConfig);
}

TEST_CASE("qq score near one for normal quantile draws") {
  std::vector<double> exact(500);
  for (int i = 0; i < 500; ++i) exact[i] = normal_quantile((i + 0.5) / 500.0);
  CHECK(qq_normality_score(exact) >= 1.0 - 1e-12);

  // Affine invariance.
  std::vector<double> scaled(500);
  for (int i = 0; i < 500; ++i) scaled[i] = -0.3 + 7.2 * exact[i];
  CHECK(qq_normality_score(scaled) == doctest::Approx(qq_normality_score(exact)).epsilon(1e-12));

  // Normal draws score high; heavy tails score visibly lower.
  Rng rng(102);
  std::vector<double> normal(2000), cauchyish(2000);
  for (int i = 0; i < 2000; ++i) {
    normal[i] = rng.normal();
    cauchyish[i] = std::tan(M_PI * (rng.uniform_open() - 0.5));
  }
  double sn = qq_normality_score(normal);
  double sc = qq_normality_score(cauchyish);
  CHECK(sn > 0.995);
  CHECK(sc < sn);
  CHECK(sc < 0.9);

  CHECK_THROWS_AS(qq_normality_score(std::vector<double>(10, 1.0)), InvalidConfig);
  CHECK_THROWS_AS(qq_normality_score(std::vector<double>(25, 1.0)), DegenerateDraws);
}
