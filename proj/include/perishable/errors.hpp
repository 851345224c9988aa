#pragma once

#include <stdexcept>
#include <string>

namespace perishable {

/// Invalid user input (config, files, protocol messages). The CLI maps it to
/// exit code 2; anything else escaping a command is a runtime failure.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace perishable
