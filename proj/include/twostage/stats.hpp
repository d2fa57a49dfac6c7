#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "twostage/errors.hpp"

namespace twostage {

/// Standard normal quantile function (inverse CDF).
///
/// Rational approximation refined by one Halley step against erfc, accurate
/// to full double precision over (0, 1). Implemented here, rather than via
/// std::normal_distribution, so that draws depend only on the consumed
/// uniforms and are identical across platforms and thread schedules.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidConfig("normal_quantile: p must lie in (0, 1)");

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement: e is the CDF error at x.
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

/// Linear-interpolation quantile (the "type 7" rule): with m sorted values
/// and h = 1 + (m - 1) q, returns v[floor(h)] interpolated toward the next
/// order statistic by the fractional part of h.
inline double quantile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidConfig("quantile_type7: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidConfig("quantile_type7: q must lie in [0, 1]");
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  double h = 1.0 + (static_cast<double>(m) - 1.0) * q;
  double fl = std::floor(h);
  std::size_t lo = static_cast<std::size_t>(fl) - 1;  // 0-based
  if (lo >= m - 1) return sorted[m - 1];
  double g = h - fl;
  return sorted[lo] + g * (sorted[lo + 1] - sorted[lo]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidConfig("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) throw InvalidConfig("sample_sd: need at least two values");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw InvalidConfig("median_of: empty sample");
  std::sort(v.begin(), v.end());
  std::size_t m = v.size();
  if (m % 2 == 1) return v[m / 2];
  return 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("pearson_correlation: size mismatch");
  if (x.size() < 2) throw InvalidConfig("pearson_correlation: need at least two points");
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateDraws("pearson_correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace twostage
