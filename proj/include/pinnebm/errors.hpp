#pragma once

#include <stdexcept>
#include <string>

namespace pinnebm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape, layout, index or missing-operand problems.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf or overflow detected during evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Data with zero spread where a scale must be estimated.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Empty batches, oversize batches, too few rows.
class CountError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what, long line = 0)
      : Error((line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) +
              "key '" + key + "': " + what),
        key_(std::move(key)),
        line_(line) {}
  const std::string& key() const { return key_; }
  long line() const { return line_; }

 private:
  std::string key_;
  long line_;
};

/// EBM pretraining never passed the endpoint-decay check.
class InitFailureError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pinnebm
