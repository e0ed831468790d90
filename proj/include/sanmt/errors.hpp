#pragma once

#include <stdexcept>
#include <string>

namespace sanmt {

// Every library failure derives from Error. The category decides the CLI exit
// code: data-shaped problems map to 2, numeric failures to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class ConsistencyError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Checkpoint header or shape manifest does not match what the loader expects.
class LoadError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DeterminismError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sanmt
