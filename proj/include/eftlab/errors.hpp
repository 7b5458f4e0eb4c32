#pragma once

#include <stdexcept>
#include <string>

namespace eftlab {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or infeasible configuration values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

// Dimension / architecture mismatch between values that must agree.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape: " + what) {}
};

// Non-finite value where a finite one is required.
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& what) : Error("non-finite: " + what) {}
};

// A caller violated an interface contract (e.g. missing map entry).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error("contract: " + what) {}
};

// Malformed checkpoint or trajectory file.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse: " + what) {}
};

// Checkpoint written by an incompatible format version.
class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error("version: " + what) {}
};

// Filesystem failures, reported with the offending path.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io: " + what) {}
};

}  // namespace eftlab
