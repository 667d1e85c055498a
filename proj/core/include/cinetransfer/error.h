#pragma once

#include <stdexcept>
#include <string>

namespace cinetransfer {

/// Raised when arguments violate an operation's preconditions (dimension
/// mismatches, out-of-range parameters, malformed files).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

#define CT_CHECK_INPUT(cond, msg)                       \
  do {                                                  \
    if (!(cond)) {                                      \
      throw ::cinetransfer::InputError(std::string(msg)); \
    }                                                   \
  } while (0)

} // namespace cinetransfer
