#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softcover {

/// Malformed input: bad distribution, dimension mismatch, bad flag value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// p(x) > 0 where q(x) = 0. Carries the offending index.
class SupportError : public InvalidArgument {
 public:
  SupportError(const std::string& what, std::size_t index)
      : InvalidArgument(what + " (index " + std::to_string(index) + ")"), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Well-formed inputs that violate a rate constraint (e.g. R <= I(U;V)).
class InfeasibleParameters : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A dense object over V^n (or a composition enumeration) would exceed its size guard.
class SizeGuardExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace softcover
