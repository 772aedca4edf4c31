#pragma once

#include <stdexcept>
#include <string>

namespace mheat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry
class DomainError : public Error {
 public:
  using Error::Error;
};
class StencilError : public Error {
 public:
  using Error::Error;
};
class ChartExitError : public Error {
 public:
  using Error::Error;
};
class CutLocusError : public Error {
 public:
  using Error::Error;
};
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Simulation and estimation
class DeadPathError : public Error {
 public:
  using Error::Error;
};
class ZeroTimeError : public Error {
 public:
  using Error::Error;
};
class InsufficientSamples : public Error {
 public:
  using Error::Error;
};
class QuadratureError : public Error {
 public:
  using Error::Error;
};
class EmptyGridError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. `line()` is 0 when the error is not tied to a
/// particular line of a config file.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& reason, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + reason : reason),
        line_(line),
        reason_(reason) {}

  int line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  int line_;
  std::string reason_;
};

}  // namespace mheat
