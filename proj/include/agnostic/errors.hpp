#pragma once

#include <stdexcept>
#include <string>

namespace agnostic {

// A caller broke a documented precondition (empty input, bad index, ...).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Input has the wrong shape: non-power-of-3 sizes, mixed domain kinds,
// points that do not belong to a hypothesis class.
class StructuralError : public std::domain_error {
 public:
  explicit StructuralError(const std::string& what) : std::domain_error(what) {}
};

// Invalid configuration value; `path` names the offending field when known.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : std::invalid_argument(path.empty() ? what : path + ": " + what), reason_(what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }
  // Message without the path prefix.
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  std::string path_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace agnostic
