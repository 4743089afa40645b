#pragma once

#include <stdexcept>
#include <string>

namespace tpgnn {

// Shapes or dimensions that do not conform to what an operation expects.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An API was called outside its contract (bad index, wrong order, empty input).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tpgnn
