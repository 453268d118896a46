#pragma once

#include <stdexcept>
#include <string>

namespace weakmass {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Grid cannot represent the requested object (too coarse, packet clipped, wrong axis).
class GridError : public Error {
 public:
  explicit GridError(const std::string& what) : Error("grid: " + what) {}
};

// Operation called outside its precondition.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain: " + what) {}
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(const std::string& what) : Error("convergence: " + what) {}
};

// Parameter cannot be identified from the supplied data.
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what) : Error("estimation: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

}  // namespace weakmass
