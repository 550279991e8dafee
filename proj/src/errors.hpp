#pragma once

#include <stdexcept>
#include <string>

namespace prco {

// Invalid configuration or misuse of an interface contract.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input (files, serialized records, CLI values).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required (aborted update steps).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace prco
