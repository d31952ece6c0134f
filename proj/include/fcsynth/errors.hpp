#pragma once

#include <stdexcept>
#include <string>

namespace fcsynth {

/// Malformed or out-of-contract input (dimension mismatch, non-finite data, bad parameters).
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown, e.g. overflow while evaluating a matrix exponential.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A state whose controlled projection lies outside the controller's domain.
class OutOfDomainError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// Unreadable or malformed file content.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace fcsynth
