#pragma once

#include <stdexcept>
#include <string>

namespace qap {

// Every failure raised by the library derives from Error so callers can
// catch the whole family; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IterationLimit : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class InfeasibleAffine : public Error {
 public:
  using Error::Error;
};

class DegenerateModel : public Error {
 public:
  using Error::Error;
};

class NoCertificate : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail
}  // namespace qap
