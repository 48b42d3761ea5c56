#pragma once

#include <stdexcept>
#include <string>

namespace mptv {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Zero denominator in a spectral solve.
class IllPosedUpdate : public Error {
 public:
  using Error::Error;
};

// Non-finite iterate in an ADMM run; usually a bad rho.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(double rho)
      : Error("ADMM iterates became non-finite (rho = " + std::to_string(rho) +
              "); try a different rho"),
        rho_(rho) {}
  double rho() const noexcept { return rho_; }

 private:
  double rho_;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mptv
