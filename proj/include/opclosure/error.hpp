#pragma once

#include <stdexcept>
#include <string>

namespace opclosure {

// Thrown for invalid inputs and numerical failures (non-SPD measures,
// CFL violations, solver breakdown, malformed configuration).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace opclosure
