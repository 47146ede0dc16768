#pragma once

#include <stdexcept>
#include <string>

namespace mvfuse {

enum class ErrorKind {
  io,        // file missing/unreadable/unwritable
  format,    // malformed file contents
  argument,  // caller violated a precondition
  runtime,   // numerical failure (NaN loss, empty carve, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }
[[noreturn]] inline void throw_format(const std::string& msg) { throw Error(ErrorKind::format, msg); }
[[noreturn]] inline void throw_argument(const std::string& msg) { throw Error(ErrorKind::argument, msg); }
[[noreturn]] inline void throw_runtime(const std::string& msg) { throw Error(ErrorKind::runtime, msg); }

}  // namespace mvfuse
