#pragma once

#include <stdexcept>
#include <string>

namespace twostage {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A matrix or vector entry is NaN or infinite.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// A predictor column is constant, so it cannot be rescaled to unit norm.
class ZeroVarianceColumn : public Error {
 public:
  ZeroVarianceColumn(int column, const std::string& what)
      : Error(what), column(column) {}
  int column;
};

class InvalidRatio : public Error {
 public:
  using Error::Error;
};

/// All penalty levels collapse to zero (e.g. X'y == 0), no usable grid.
class DegenerateGrid : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

/// Second-stage linear system is singular and no regularization was requested.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// Restricted Gram block C11 is singular; sign-condition margins are undefined.
class SingularC11 : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class EmptyEnsemble : public Error {
 public:
  using Error::Error;
};

/// All draws in a sample are identical; location/scale-free scores are undefined.
class DegenerateDraws : public Error {
 public:
  using Error::Error;
};

class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

/// CSV ingestion failure; row/column are 1-based.
class ParseError : public Error {
 public:
  ParseError(int row, int column, const std::string& what)
      : Error(what), row(row), column(column) {}
  int row;
  int column;
};

}  // namespace twostage
