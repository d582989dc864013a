#pragma once

#include <stdexcept>
#include <string>

namespace lrvb {

// Malformed inputs: bad dimensions, non-symmetric matrices, invalid configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: singular systems, non-interior parameters.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mixture component lost (almost) all of its expected mass.
class DegeneracyError : public NumericalError {
 public:
  DegeneracyError(const std::string& what, int component)
      : NumericalError(what), component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

}  // namespace lrvb
