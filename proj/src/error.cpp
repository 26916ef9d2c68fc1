#include "ftlekit/error.hpp"

namespace ftlekit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Argument: return "argument";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Integration: return "integration";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Io: return "io";
    case ErrorCode::Version: return "version";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::Checksum: return "checksum";
    case ErrorCode::Format: return "format";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

}  // namespace ftlekit
