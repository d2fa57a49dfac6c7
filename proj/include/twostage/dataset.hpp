#pragma once

#include <string>
#include <vector>

#include "twostage/types.hpp"

namespace twostage {

/// Column transform recorded by standardize(), sufficient to map
/// coefficients fitted on the standardized design back to the original
/// data scale.
struct StandardizeTransform {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;  // root mean square of the centered column

  /// Coefficients on the original scale plus the implied offset
  /// (offset = -sum_j mean_j * beta_orig_j, since y is left uncentered).
  std::pair<Eigen::VectorXd, double> to_original(const Eigen::VectorXd& beta_std) const;
};

struct StandardizedData {
  RegressionDataset ds;
  StandardizeTransform transform;
};

/// Checks finiteness and shape; throws DimensionMismatch, NonFinite,
/// TooFewSamples (n < 2).
void validate_dataset(const RegressionDataset& ds);

/// Centers each column and rescales it so that (1/n) sum_i x_ij^2 == 1.
/// The response is left as is. Throws ZeroVarianceColumn for constant
/// columns. Idempotent: standardizing a standardized dataset is a no-op
/// up to floating point roundoff.
StandardizedData standardize(const RegressionDataset& ds);

/// True when every column is centered and unit-mean-square within tol.
bool is_standardized(const Eigen::MatrixXd& X, double tol = 1e-8);

struct CsvData {
  RegressionDataset ds;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

/// Loads a numeric CSV. `response` designates the response column either by
/// header name or by 0-based index. A header row is detected by attempting
/// to parse the first row as numbers. Throws ParseError (1-based row and
/// column) on malformed cells, InvalidConfig on a bad response designator.
CsvData load_csv(const std::string& path, const std::string& response);

}  // namespace twostage
