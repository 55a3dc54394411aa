// Error types shared across the library. Each maps to a CLI exit code:
// config/validation -> 2, resource guard -> 3, numerical failure -> 4.
#pragma once

#include <stdexcept>
#include <string>

namespace coweave {

// Invalid configuration, file format, or argument values.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Request exceeds a resource guard (memory/size caps).
class resource_error : public std::runtime_error {
public:
  explicit resource_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Numerical failure (non-finite state, solver breakdown), with context.
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace coweave
