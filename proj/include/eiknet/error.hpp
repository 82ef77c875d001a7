#pragma once

#include <stdexcept>
#include <string>

namespace eiknet {

/// Base class for every failure raised by the library. Messages are short,
/// stable strings ("source in obstacle", "out of domain", ...) that callers
/// and the CLI match on.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace eiknet
