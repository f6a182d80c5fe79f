#pragma once

#include <stdexcept>
#include <string>

namespace tabmdp {

/// Raised when caller-supplied data violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine detects that its own output is corrupt
/// (residual too large, negative variance, ...).
class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tabmdp
