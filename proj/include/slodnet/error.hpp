#pragma once

#include <stdexcept>
#include <string>

namespace slodnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Fiber network generation produced no admissible network.
class GenerationError : public Error {
public:
  using Error::Error;
};

/// Malformed network or configuration file.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Invalid input to an operator or mesh routine (bad weights, empty element, ...).
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Linear or eigenvalue solver failure.
class SolverError : public Error {
public:
  SolverError(const std::string& what, double residual = -1.0)
      : Error(what), residual_(residual) {}

  /// Achieved relative residual, negative when not applicable.
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

/// The selected right-hand sides do not form a stable basis.
class RieszError : public Error {
public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace slodnet
