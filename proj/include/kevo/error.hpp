#pragma once

#include <stdexcept>
#include <string>

namespace kevo {

// Error categories map 1:1 onto CLI exit codes (config=2, data=3, numeric=4).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

// Shape/structure violations: bad axes, dangling graph edges, mask mismatch.
struct DimensionError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

// Non-finite values during training, checksum failures on load.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace kevo
