#pragma once

#include <stdexcept>

namespace defocus {

// Argument outside its mathematical domain (nonpositive sigma, focus depth
// at or inside the focal length, ...). Maps to CLI exit code 3.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ill-formed pixel data or inconsistent shapes. Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or codec failure. Maps to CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace defocus
