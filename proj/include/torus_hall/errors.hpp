#pragma once

#include <stdexcept>
#include <string>

namespace torus_hall {

// Base of every library error; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or argument outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A theta series needs more terms than the policy allows, or its terms overflow.
class NonconvergentParameter : public Error {
 public:
  using Error::Error;
};

// The deformed metric denominator is nonpositive (s >= s_c).
class PastCriticalDeformation : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class NoBracket : public Error {
 public:
  using Error::Error;
};

class NonPeriodicHamiltonian : public Error {
 public:
  using Error::Error;
};

}  // namespace torus_hall
