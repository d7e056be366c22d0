#pragma once

#include <stdexcept>

namespace satcons::cli {

// Bad flag values or combinations; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace satcons::cli
