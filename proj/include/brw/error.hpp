#pragma once

#include <stdexcept>
#include <string>

namespace brw {

// Invalid or unsupported user input (bad pmf, unsupported scheme, reducible matrix, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called outside the regime where it is defined.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace brw
