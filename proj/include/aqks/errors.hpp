#pragma once

#include <stdexcept>
#include <string>

namespace aqks {

// Every failure raised by the library derives from aqks::Error so callers can
// catch the whole family at once and still branch on the concrete kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Qubit count or container length outside the supported range.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Input violates a numerical contract (e.g. non-Hermitian matrix).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Dataset content unusable (missing class, non-finite values, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Classifier could not be trained on the supplied data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace aqks
