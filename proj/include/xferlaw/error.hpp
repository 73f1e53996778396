#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xferlaw {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid records, impossible requests.
/// The CLI maps this family to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A row-level problem while reading a record file. `row` is 1-based and
/// counts data rows (the header is row 0).
class ParseError : public InputError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : InputError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ValidationError : public ParseError {
 public:
  using ParseError::ParseError;
};

class DuplicateKeyError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Evaluation outside the law's domain (p < 1, f < 1, non-positive shifted base).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Parameters that make a closed form undefined (beta = 0, A + G = 0, ...).
class DegenerateParamsError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public InputError {
 public:
  using InputError::InputError;
};

/// No multi-start run ended converged with admissible exponents.
class FitFailedError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public InputError {
 public:
  using InputError::InputError;
};

class UnachievableTargetError : public InputError {
 public:
  using InputError::InputError;
};

class MissingEpochsError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace xferlaw
