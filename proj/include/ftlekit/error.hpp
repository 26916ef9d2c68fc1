#pragma once

#include <stdexcept>
#include <string>

namespace ftlekit {

enum class ErrorCode {
  Argument = 1,
  Domain,
  Integration,
  Divergence,
  Degenerate,
  Io,
  Version,
  Truncated,
  Checksum,
  Format,
  Config,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; the code drives C-API status and CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ftlekit
