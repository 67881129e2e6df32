#pragma once

#include <stdexcept>
#include <string>

namespace gforge {

// Failure categories map onto CLI exit codes: kInvalidArgument and kIo exit
// with 1, kNumerical exits with 2.
enum class ErrorKind { kInvalidArgument, kIo, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_invalid(const std::string& message) {
  throw Error(ErrorKind::kInvalidArgument, message);
}

[[noreturn]] inline void fail_io(const std::string& message) {
  throw Error(ErrorKind::kIo, message);
}

[[noreturn]] inline void fail_numerical(const std::string& message) {
  throw Error(ErrorKind::kNumerical, message);
}

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNumerical: return "numerical";
  }
  return "unknown";
}

}  // namespace gforge
