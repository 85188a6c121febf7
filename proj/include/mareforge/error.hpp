#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mareforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data failed validation. Carries the offending data row when known
/// (0-based, not counting the header).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what,
                     std::optional<std::size_t> row = std::nullopt)
      : Error(row ? what + " (row " + std::to_string(*row) + ")" : what),
        row_(row) {}

  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

/// A mathematical precondition was violated (division by a zero input,
/// empty sample, non-stationary model, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Requested target MARE exceeds the feasibility region.
class InfeasibleTarget : public Error {
 public:
  InfeasibleTarget(const std::string& what, double max_feasible,
                   double binding_x)
      : Error(what), max_feasible_(max_feasible), binding_x_(binding_x) {}

  double max_feasible() const { return max_feasible_; }
  double binding_x() const { return binding_x_; }

 private:
  double max_feasible_;
  double binding_x_;
};

/// An iterative solver gave up.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mareforge
