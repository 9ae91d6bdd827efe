#ifndef DBM_ERRORS_HPP_
#define DBM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dbm {

// Argument outside an operation's precondition (bad size, non-increasing
// grid, probability outside [0,1], ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A formula evaluated outside the region where it is defined (past the
// spike absorption time, at a spectral edge, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoleError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateInputError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace dbm

#endif  // DBM_ERRORS_HPP_
