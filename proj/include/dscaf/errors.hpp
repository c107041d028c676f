#ifndef DSCAF_ERRORS_HPP_
#define DSCAF_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dscaf {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied a value outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

// An API precondition between modules was violated (schema mismatch, sold
// item handed to the planner, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

// Treatment effects cannot be estimated from the given log.
class IdentifiabilityError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatchError : public ContractError {
 public:
  using ContractError::ContractError;
};

class MissingHoldoutError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, int line, std::string key)
      : Error(format(message, line, key)), line_(line), key_(std::move(key)) {}

  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  static std::string format(const std::string& message, int line,
                            const std::string& key) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!key.empty()) out += " [" + key + "]";
    return out + ": " + message;
  }

  int line_;
  std::string key_;
};

}  // namespace dscaf

#endif  // DSCAF_ERRORS_HPP_
