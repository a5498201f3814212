#pragma once

#include <stdexcept>
#include <string>

namespace stylo {

// Bad input data or a failed runtime step (as opposed to a programming or
// usage error, which uses std::invalid_argument).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stylo
