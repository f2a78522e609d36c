#pragma once

#include <stdexcept>
#include <string>

namespace slrlab {

/// Input violates a documented invariant (bad spec, bad config, bad shape).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace slrlab
