#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cohadm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable category, e.g. "topology" or "config".
  virtual const char* kind() const noexcept { return "error"; }
};

class TopologyError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "topology"; }
};

class AssemblyError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "assembly"; }
};

class DomainError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

class ConfigError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// Raised when the Dirichlet-reduced system matrix is not positive definite.
class SingularSystemError : public Error {
public:
  SingularSystemError(const std::string& what, int free_rigid_modes)
      : Error(what), free_rigid_modes_(free_rigid_modes) {}
  const char* kind() const noexcept override { return "singular-system"; }
  int free_rigid_modes() const noexcept { return free_rigid_modes_; }

private:
  int free_rigid_modes_;
};

/// Parse failure with the offending file and 1-based line (0 when unknown).
class ParseError : public Error {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(file + ":" + std::to_string(line) + ": " + msg), file_(file), line_(line) {}
  const char* kind() const noexcept override { return "parse"; }
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string file_;
  std::size_t line_;
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

} // namespace cohadm
