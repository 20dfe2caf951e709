#pragma once

#include <stdexcept>
#include <string>

namespace aedopt {

// All failures surface as typed exceptions so the CLI can tag them by stage
// and tests can assert on the category rather than message text.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class InvalidSplitError : public Error {
 public:
  using Error::Error;
};

class DegenerateTargetError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, int epoch) : Error(msg), epoch(epoch) {}
  int epoch;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

// Exact solver ran out of its node budget; carries the best feasible value
// found so far and the remaining optimality gap.
class ResourceBudgetError : public Error {
 public:
  ResourceBudgetError(const std::string& msg, double incumbent, double gap)
      : Error(msg), incumbent(incumbent), gap(gap) {}
  double incumbent;
  double gap;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace aedopt
