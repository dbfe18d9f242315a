#pragma once

#include <stdexcept>
#include <string>

namespace diffnet {

// Raised when inputs violate a documented precondition or a file has
// malformed content. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a file cannot be opened, read, or written. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diffnet
