#pragma once

#include <stdexcept>
#include <string>

namespace clab {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// An action profile does not fit the game it was used with.
class InvalidProfileError : public Error {
 public:
  explicit InvalidProfileError(const std::string& what) : Error(what) {}
};

// Malformed or inconsistent configuration / serialized input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// A conditional quantity was requested for an event of probability zero.
class UndefinedConditionalError : public Error {
 public:
  explicit UndefinedConditionalError(const std::string& what) : Error(what) {}
};

// A scenario is structurally invalid (wrong player count, empty bid list, ...).
class InvalidScenarioError : public Error {
 public:
  explicit InvalidScenarioError(const std::string& what) : Error(what) {}
};

}  // namespace clab
