#pragma once

#include <stdexcept>
#include <string>

namespace lutloc {

/// Rejected argument or query (bad index, non-finite point, invalid config).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent data (files, traces, formulas).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lutloc
