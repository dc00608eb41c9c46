#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace magspec {

// Base of every error raised by the library. The CLI maps each subclass to
// one exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad text, bad JSON, mismatched dimensions, violated
// preconditions on arguments.
class InputError : public Error {
public:
  using Error::Error;
};

class DimensionError : public InputError {
public:
  using InputError::InputError;
};

class ParseError : public InputError {
public:
  ParseError(const std::string& what, std::size_t offset)
      : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

// A value lies outside the domain where an operation is meaningful, e.g. a
// negative weight handed to a reverse Hoelder check.
class DomainError : public InputError {
public:
  using InputError::InputError;
};

// A covering (or partition built on it) cannot be certified.
class CertificationError : public Error {
public:
  CertificationError(const std::string& what, std::vector<double> witness)
      : Error(what), witness_(std::move(witness)) {}

  const std::vector<double>& witness() const noexcept { return witness_; }

private:
  std::vector<double> witness_;
};

// Factorization breakdown, non-convergence, failed residual verification.
class SolverError : public Error {
public:
  using Error::Error;
};

} // namespace magspec
