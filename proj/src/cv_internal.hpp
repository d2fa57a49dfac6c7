#pragma once

#include <cmath>
#include <vector>

#include "twostage/lasso.hpp"
#include "twostage/rng.hpp"
#include "twostage/stats.hpp"

// Fold bookkeeping shared by the cross validation variants. Kept out of the
// public headers: callers only see CvResult.

namespace twostage::detail {

// Seeded shuffle split into k near-equal folds; fold_of_row[i] in [0, k).
inline std::vector<int> fold_assignment(int n, int k, std::uint64_t seed) {
  std::vector<int> perm(n), fold(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng = make_stream(seed, Stream::folds);
  rng.shuffle(perm);
  for (int i = 0; i < n; ++i) fold[perm[i]] = i % k;
  return fold;
}

// Pools fold_sq[f][l] (held-out squared error totals) into cv_mean/cv_se and
// resolves both selection indices, ties toward the larger penalty.
inline void finish_cv_curve(CvResult& cv, const std::vector<std::vector<double>>& fold_sq,
                            const std::vector<int>& fold_size, int n, int k) {
  const int L = static_cast<int>(cv.grid.values.size());
  cv.cv_mean.assign(L, 0.0);
  cv.cv_se.assign(L, 0.0);
  std::vector<double> fold_means(k);
  for (int l = 0; l < L; ++l) {
    double total = 0.0;
    for (int f = 0; f < k; ++f) total += fold_sq[f][l];
    cv.cv_mean[l] = total / static_cast<double>(n);
    for (int f = 0; f < k; ++f)
      fold_means[f] = fold_sq[f][l] / static_cast<double>(fold_size[f]);
    cv.cv_se[l] = sample_sd(fold_means) / std::sqrt(static_cast<double>(k));
  }

  double best = cv.cv_mean[0];
  for (int l = 1; l < L; ++l) best = std::min(best, cv.cv_mean[l]);
  for (int l = 0; l < L; ++l) {
    if (cv.cv_mean[l] <= best + 1e-12) {
      cv.lambda_min_index = l;  // first hit is the largest penalty
      break;
    }
  }
  cv.lambda_min = cv.grid.values[cv.lambda_min_index];

  const double within_se = cv.cv_mean[cv.lambda_min_index] + cv.cv_se[cv.lambda_min_index];
  for (int l = 0; l <= cv.lambda_min_index; ++l) {
    if (cv.cv_mean[l] <= within_se + 1e-12) {
      cv.lambda_1se_index = l;  // first hit is the largest penalty
      break;
    }
  }
  cv.lambda_1se = cv.grid.values[cv.lambda_1se_index];
}

}  // namespace twostage::detail
