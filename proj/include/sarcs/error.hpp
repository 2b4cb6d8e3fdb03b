#pragma once

#include <stdexcept>
#include <string>

namespace sarcs {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter is outside its admissible domain (rho > 1, q_hat <= 0, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Vector or matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// An iterative solver gave up before reaching its tolerances.
class SolverFailure : public Error {
 public:
  explicit SolverFailure(const std::string& msg) : Error(msg) {}
};

// Too few data points for a fit.
class ArityError : public Error {
 public:
  explicit ArityError(const std::string& msg) : Error(msg) {}
};

// Least-squares design is rank deficient or numerically singular.
class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& msg) : Error(msg) {}
};

// Input file or record does not follow the documented schema.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};

}  // namespace sarcs
