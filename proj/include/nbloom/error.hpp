#pragma once

#include <stdexcept>
#include <string>

namespace nbloom {

// Error categories map onto CLI exit codes: config 2, data 3, runtime 4.
enum class ErrorKind { config, data, runtime };

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ErrorKind kind = ErrorKind::runtime)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ErrorKind::config) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, ErrorKind::data) {}
};

}  // namespace nbloom
