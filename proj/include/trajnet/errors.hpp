#pragma once

#include <stdexcept>
#include <string>

namespace trajnet {

// Exit-code contract of the CLI: user/config errors map to 1, numerical
// failures to 2.

/// Input outside the mathematical domain of a transform (p <= 0 for logit, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file; carries the file name and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, long line, const std::string& what);
  const std::string& file() const { return file_; }
  long line() const { return line_; }

 private:
  std::string file_;
  long line_;
};

/// Bad configuration value or unknown key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Violated precondition of an in-memory API call (dimension mismatch, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failure, non-finite likelihood, non-convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trajnet
