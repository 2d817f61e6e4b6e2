#pragma once

#include <stdexcept>
#include <string>

namespace pgland {

// Base for every error the library throws on bad input or failed numerics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The parameter lies outside the set where the objective is defined
// (e.g. an LQR gain whose closed loop does not contract). Optimizers treat
// this as a rejected step rather than a fatal error.
class InfeasibleParameter : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pgland
