#pragma once

#include <stdexcept>
#include <string>

namespace evlog {

// Invalid user-supplied configuration (bad counts, infeasible packing, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed on-disk data (WAV/CSV/label/scenario files).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Detected fault inside the device simulation (buffer overrun, file-handle
// exhaustion). These are findings, not bugs: the simulation reports them.
class SimFault : public std::runtime_error {
 public:
  explicit SimFault(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/layer shape mismatches and other numeric-contract violations.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evlog
