// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Error categories shared by every module. The C API maps each kind onto a
// status code and the CLI onto a process exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace patchdelta {

enum class ErrorKind {
  usage,    // invalid argument or configuration
  data,     // malformed or inconsistent input data
  numeric,  // non-finite value in a forward or backward pass
  io,       // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void usage_error(const std::string& what) { throw Error(ErrorKind::usage, what); }
[[noreturn]] inline void data_error(const std::string& what) { throw Error(ErrorKind::data, what); }
[[noreturn]] inline void numeric_error(const std::string& what) { throw Error(ErrorKind::numeric, what); }
[[noreturn]] inline void io_error(const std::string& what) { throw Error(ErrorKind::io, what); }

}  // namespace patchdelta
