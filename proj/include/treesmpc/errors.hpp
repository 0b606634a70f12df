#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace treesmpc {

/// Malformed input document (bad JSON, missing key, wrong shape of a field).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates one or more model invariants. All violations
/// found are collected in issues(); what() joins them with "; ".
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues);

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Operand shapes do not match the model or tree they are used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File system failures (unreadable input, unwritable output directory).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace treesmpc
