#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "twostage/rng.hpp"
#include "twostage/stats.hpp"

using namespace twostage;

TEST_CASE("normal_quantile matches tabulated values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-10));
  CHECK(normal_quantile(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-8));
  CHECK_THROWS_AS(normal_quantile(0.0), InvalidConfig);
  CHECK_THROWS_AS(normal_quantile(1.0), InvalidConfig);
}

TEST_CASE("quantile_type7 interpolates order statistics") {
  std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 5.0);
  CHECK(quantile_type7(v, 0.5) == 3.0);
  // h = 1 + 4 * 0.2 = 1.8
  CHECK(quantile_type7(v, 0.2) == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(quantile_type7(v, 0.8) == doctest::Approx(4.2).epsilon(1e-15));
  CHECK(quantile_type7({7.0}, 0.3) == 7.0);
}

TEST_CASE("uniform draws stay in range and differ across streams") {
  Rng a = make_stream(7, Stream::noise, 0);
  Rng b = make_stream(7, Stream::noise, 1);
  Rng c = make_stream(7, Stream::folds, 0);
  bool any_diff_ab = false, any_diff_ac = false;
  for (int i = 0; i < 100; ++i) {
    double ua = a.uniform01(), ub = b.uniform01(), uc = c.uniform01();
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
    if (ua != ub) any_diff_ab = true;
    if (ua != uc) any_diff_ac = true;
  }
  CHECK(any_diff_ab);
  CHECK(any_diff_ac);
}

TEST_CASE("identical keys reproduce identical sequences") {
  Rng a = make_stream(42, Stream::bootstrap, 3, 1);
  Rng b = make_stream(42, Stream::bootstrap, 3, 1);
  for (int i = 0; i < 50; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("below is bounded and hits every residue eventually") {
  Rng r(123);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 200; ++i) {
    auto v = r.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("normal draws have plausible first two moments") {
  Rng r(2024);
  const int m = 20000;
  double s = 0, s2 = 0;
  for (int i = 0; i < m; ++i) {
    double x = r.normal();
    s += x;
    s2 += x * x;
  }
  double mu = s / m;
  double var = s2 / m - mu * mu;
  CHECK(std::abs(mu) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("sample statistics helpers") {
  std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(v) == doctest::Approx(5.0));
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
  CHECK(median_of({3, 1, 2}) == 2.0);
  CHECK(median_of({4, 1, 2, 3}) == 2.5);
  CHECK(pearson_correlation({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson_correlation({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pearson_correlation({1, 1}, {1, 2}), DegenerateDraws);
}
