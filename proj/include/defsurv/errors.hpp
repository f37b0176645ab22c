#pragma once

#include <stdexcept>
#include <string>

namespace defsurv {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension mismatches, invalid option values, malformed scenarios.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Cure-fraction quantities requested for a non-defective parameter set.
class NotDefectiveError : public Error {
 public:
  using Error::Error;
};

/// Overflow, failed inversions, bad stencils and other numeric breakdowns.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File and parsing problems; carries a line number where available.
class IoError : public Error {
 public:
  using Error::Error;
  IoError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_ = -1;
};

}  // namespace defsurv
