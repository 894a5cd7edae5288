#pragma once

#include <stdexcept>
#include <string>

namespace dropwatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed external input (CSV, labels, config, model files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A numeric failure during training or optimization (NaN/inf).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dropwatch
