#pragma once

#include <stdexcept>
#include <string>

namespace pmfair {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance matrix violates a structural invariant (negative entry, zero row).
class InvalidInstance : public Error {
 public:
  InvalidInstance(const std::string& what, int row = -1, int col = -1)
      : Error(what), row_(row), col_(col) {}
  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

class DimensionError : public Error {
  using Error::Error;
};

class DomainError : public Error {
  using Error::Error;
};

class ParamError : public Error {
  using Error::Error;
};

/// The requested (kind, p) pair is outside what the routine handles.
class UnsupportedRegime : public Error {
  using Error::Error;
};

class ScaleError : public Error {
  using Error::Error;
};

class NumericalError : public Error {
  using Error::Error;
};

class DegenerateOptimum : public Error {
  using Error::Error;
};

class PreconditionError : public Error {
  using Error::Error;
};

}  // namespace pmfair
