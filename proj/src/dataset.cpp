#include "twostage/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace twostage {

std::pair<Eigen::VectorXd, double> StandardizeTransform::to_original(
    const Eigen::VectorXd& beta_std) const {
  if (beta_std.size() != scales.size())
    throw DimensionMismatch("to_original: coefficient length does not match transform");
  Eigen::VectorXd beta = beta_std.cwiseQuotient(scales);
  double offset = -means.dot(beta);
  return {beta, offset};
}

void validate_dataset(const RegressionDataset& ds) {
  if (ds.X.rows() != ds.y.size())
    throw DimensionMismatch("validate_dataset: X has " + std::to_string(ds.X.rows()) +
                            " rows but y has " + std::to_string(ds.y.size()) + " entries");
  if (ds.X.cols() == 0) throw DimensionMismatch("validate_dataset: X has no columns");
  if (ds.X.rows() < 2) throw TooFewSamples("validate_dataset: need at least two rows");
  if (!ds.X.allFinite()) throw NonFinite("validate_dataset: X contains a non-finite entry");
  if (!ds.y.allFinite()) throw NonFinite("validate_dataset: y contains a non-finite entry");
  if (ds.beta_true && ds.beta_true->size() != ds.X.cols())
    throw DimensionMismatch("validate_dataset: beta_true length does not match p");
}

StandardizedData standardize(const RegressionDataset& ds) {
  validate_dataset(ds);
  const int n = ds.n(), p = ds.p();
  StandardizedData out;
  out.ds = ds;
  out.transform.means.resize(p);
  out.transform.scales.resize(p);
  for (int j = 0; j < p; ++j) {
    double m = ds.X.col(j).mean();
    Eigen::VectorXd centered = ds.X.col(j).array() - m;
    double scale = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    if (scale == 0.0)
      throw ZeroVarianceColumn(j, "standardize: column " + std::to_string(j) + " is constant");
    out.ds.X.col(j) = centered / scale;
    out.transform.means[j] = m;
    out.transform.scales[j] = scale;
  }
  out.ds.standardized = true;
  return out;
}

bool is_standardized(const Eigen::MatrixXd& X, double tol) {
  const double n = static_cast<double>(X.rows());
  for (int j = 0; j < X.cols(); ++j) {
    if (std::abs(X.col(j).mean()) > tol) return false;
    if (std::abs(X.col(j).squaredNorm() / n - 1.0) > tol) return false;
  }
  return true;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& token, double& value) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && token.size() > 0;
}

}  // namespace

CsvData load_csv(const std::string& path, const std::string& response) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("load_csv: cannot open " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trimmed(line).empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ParseError(1, 1, "load_csv: file is empty");

  auto first_row = split_csv_line(lines[0]);
  const int n_cols = static_cast<int>(first_row.size());
  if (n_cols < 2) throw ParseError(1, 1, "load_csv: need at least two columns");

  bool has_header = false;
  for (const auto& tok : first_row) {
    double v;
    if (!parse_double(trimmed(tok), v)) {
      has_header = true;
      break;
    }
  }

  std::vector<std::string> names(n_cols);
  if (has_header) {
    for (int j = 0; j < n_cols; ++j) names[j] = trimmed(first_row[j]);
  } else {
    for (int j = 0; j < n_cols; ++j) names[j] = "c" + std::to_string(j);
  }

  // Resolve the response column: header name first, then 0-based index.
  int resp_col = -1;
  for (int j = 0; j < n_cols; ++j) {
    if (names[j] == response) {
      resp_col = j;
      break;
    }
  }
  if (resp_col < 0) {
    double idx;
    if (parse_double(response, idx) && idx == std::floor(idx) && idx >= 0 && idx < n_cols) {
      resp_col = static_cast<int>(idx);
    } else {
      throw InvalidConfig("load_csv: response column '" + response + "' not found");
    }
  }

  const int first_data = has_header ? 1 : 0;
  const int n = static_cast<int>(lines.size()) - first_data;
  if (n < 2) throw TooFewSamples("load_csv: need at least two data rows");

  CsvData out;
  out.ds.X.resize(n, n_cols - 1);
  out.ds.y.resize(n);
  out.response_name = names[resp_col];
  for (int j = 0; j < n_cols; ++j) {
    if (j != resp_col) out.predictor_names.push_back(names[j]);
  }

  for (int i = 0; i < n; ++i) {
    auto row = split_csv_line(lines[first_data + i]);
    const int file_row = first_data + i + 1;
    if (static_cast<int>(row.size()) != n_cols)
      throw ParseError(file_row, 1,
                       "load_csv: row " + std::to_string(file_row) + " has " +
                           std::to_string(row.size()) + " cells, expected " +
                           std::to_string(n_cols));
    int xj = 0;
    for (int j = 0; j < n_cols; ++j) {
      double v;
      if (!parse_double(trimmed(row[j]), v))
        throw ParseError(file_row, j + 1,
                         "load_csv: non-numeric cell at row " + std::to_string(file_row) +
                             ", column " + std::to_string(j + 1) + ": '" + trimmed(row[j]) + "'");
      if (j == resp_col)
        out.ds.y[i] = v;
      else
        out.ds.X(i, xj++) = v;
    }
  }
  validate_dataset(out.ds);
  return out;
}

}  // namespace twostage
