#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace filmflow {

/// Argument outside the domain of a nonlinearity (e.g. f(r) for r <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A field value hit the singularity of an unregularized functional.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, std::size_t cell, double value)
      : std::runtime_error(what + " (cell " + std::to_string(cell) +
                           ", value " + std::to_string(value) + ")"),
        cell_(cell),
        value_(value) {}

  std::size_t cell() const noexcept { return cell_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t cell_;
  double value_;
};

/// Parameter set violates a model hypothesis; names the field.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& constraint)
      : std::invalid_argument(field + ": " + constraint), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed configuration: unknown key, unparsable value, missing file.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative linear solver did not reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The degenerate elliptic solve failed to settle along the floor ladder.
class DegenerateSolveError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace filmflow
