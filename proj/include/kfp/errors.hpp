#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MetricError : public Error {
  using Error::Error;
};
class NonpositiveWeight : public Error {
  using Error::Error;
};
class DomainError : public Error {
  using Error::Error;
};
class UnknownIdentifier : public Error {
 public:
  explicit UnknownIdentifier(std::string name) : Error("unknown identifier '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, std::set<std::string> expected, const std::string& found)
      : Error(format(line, column, expected, found)), line_(line), column_(column), expected_(std::move(expected)) {}
  int line() const { return line_; }
  int column() const { return column_; }
  const std::set<std::string>& expected() const { return expected_; }

 private:
  static std::string format(int line, int column, const std::set<std::string>& expected, const std::string& found) {
    std::string s = "syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": expected ";
    bool first = true;
    for (const auto& e : expected) {
      if (!first) s += ", ";
      s += e;
      first = false;
    }
    s += " but found " + found;
    return s;
  }
  int line_;
  int column_;
  std::set<std::string> expected_;
};

class DegenerateA : public Error {
  using Error::Error;
};
class NotIsotropic : public Error {
  using Error::Error;
};
class InfeasibleRegion : public Error {
  using Error::Error;
};
class InvalidCertificate : public Error {
  using Error::Error;
};
class CFLViolation : public Error {
  using Error::Error;
};
class LinearSolveFailure : public Error {
  using Error::Error;
};
class InsufficientData : public Error {
  using Error::Error;
};
class NonpositiveValues : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};

}  // namespace kfp
