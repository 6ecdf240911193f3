#pragma once

#include <stdexcept>
#include <string>

namespace psocsim {

/// Base class for every error raised by the simulator library.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An event was scheduled before the current simulated time (model bug).
class SchedulingInPast : public SimError {
 public:
  using SimError::SimError;
};

class LengthOverrun : public SimError {
 public:
  using SimError::SimError;
};

class InvalidDescriptor : public SimError {
 public:
  using SimError::SimError;
};

class ChannelBusy : public SimError {
 public:
  using SimError::SimError;
};

class PayloadExceedsUniqueLimit : public SimError {
 public:
  using SimError::SimError;
};

class ProtocolViolation : public SimError {
 public:
  using SimError::SimError;
};

class OutOfBoundsEvent : public SimError {
 public:
  using SimError::SimError;
};

class InvalidNetwork : public SimError {
 public:
  using SimError::SimError;
};

class InsufficientPoints : public SimError {
 public:
  using SimError::SimError;
};

/// Configuration problems. `key()` names the offending key (may be empty for
/// pure syntax errors), `line()` is 1-based or 0 when not file-backed.
class ConfigError : public SimError {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : SimError(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownKey : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidValue : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace psocsim
