#pragma once

#include <stdexcept>
#include <string>

namespace kanheat {

// Base of every error the library raises. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or similar numerical breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public NumericError {
 public:
  TruncationError(const std::string& what, int suggested_terms)
      : NumericError(what), suggested_terms_(suggested_terms) {}
  int suggested_terms() const { return suggested_terms_; }

 private:
  int suggested_terms_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace kanheat
