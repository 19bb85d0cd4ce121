#pragma once

#include <stdexcept>
#include <string>

namespace ekcpd {

enum class ErrorCode {
  InvalidArgument,
  ZeroVector,
  DegenerateSequence,
  IndexOutOfRange,
  Infeasible,
  TooLarge,
  TooManyChangepoints,
  MemoryGuard,
  InvalidK,
  WindowTooLarge,
  NoTrueChanges,
  DegenerateCurve,
  Format,
  Internal,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateSequence: return "DegenerateSequence";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::TooManyChangepoints: return "TooManyChangepoints";
    case ErrorCode::MemoryGuard: return "MemoryGuard";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::NoTrueChanges: return "NoTrueChanges";
    case ErrorCode::DegenerateCurve: return "DegenerateCurve";
    case ErrorCode::Format: return "Format";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

// Every library failure is reported through this type; `code()` lets callers
// (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ekcpd
