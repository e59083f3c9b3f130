#pragma once

#include <stdexcept>
#include <string>

namespace rwre {

/// Base of every error raised by the library. The harness maps these onto
/// exit codes, so new failure modes should derive from one of the classes
/// below rather than from std::runtime_error directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An environment law breaks ellipticity, normalisation or transience.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed environment law (support outside [c, 1-c], bad weights, ...).
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// The potential series did not meet its tail criterion before the hard cap.
class DepthExceeded : public Error {
 public:
  using Error::Error;
};

/// A requested region is not covered by the dependence cone of the input.
class WindowTooSmall : public Error {
 public:
  using Error::Error;
};

class WindowMismatch : public Error {
 public:
  using Error::Error;
};

/// Two walks at odd separation can never occupy the same site at equal times.
class ParityError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Estimated work (site-steps) above the configured budget.
class ResourceCap : public Error {
 public:
  using Error::Error;
};

class IOError : public Error {
 public:
  using Error::Error;
};

/// Class name of a library error, for messages.
inline const char* error_name(const std::exception& e) noexcept {
  if (dynamic_cast<const AssumptionViolation*>(&e)) return "AssumptionViolation";
  if (dynamic_cast<const InvalidSpec*>(&e)) return "InvalidSpec";
  if (dynamic_cast<const DepthExceeded*>(&e)) return "DepthExceeded";
  if (dynamic_cast<const WindowTooSmall*>(&e)) return "WindowTooSmall";
  if (dynamic_cast<const WindowMismatch*>(&e)) return "WindowMismatch";
  if (dynamic_cast<const ParityError*>(&e)) return "ParityError";
  if (dynamic_cast<const InsufficientSamples*>(&e)) return "InsufficientSamples";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const ResourceCap*>(&e)) return "ResourceCap";
  if (dynamic_cast<const IOError*>(&e)) return "IOError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "error";
}

}  // namespace rwre
