#pragma once

#include <stdexcept>

namespace docee {

// Error families, mapped to CLI exit codes.
struct IoError : std::runtime_error {       // unreadable/unwritable files, bad JSON
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {   // documents violating corpus invariants
  using std::runtime_error::runtime_error;
};
struct NanError : std::runtime_error {      // non-finite loss during training
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {   // bad config keys/values, infeasible setups
  using std::runtime_error::runtime_error;
};

}  // namespace docee
