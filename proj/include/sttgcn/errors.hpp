#pragma once

#include <stdexcept>
#include <string>

namespace sttgcn {

// Caller passed something structurally invalid (bad mode, shape mismatch, rank out of range).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data is unusable (non-finite values, malformed files, divergence).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sttgcn
