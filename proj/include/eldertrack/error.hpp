#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eldertrack {

enum class ErrorKind {
  Validation,
  Io,
  NoValidDays,
  NoOriginDetectable,
  NormGap,
  UnknownReceiver,
  EigenFailure,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::NoValidDays: return "no_valid_days";
    case ErrorKind::NoOriginDetectable: return "no_origin_detectable";
    case ErrorKind::NormGap: return "norm_gap";
    case ErrorKind::UnknownReceiver: return "unknown_receiver";
    case ErrorKind::EigenFailure: return "eigen_failure";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so the CLI can map it
// onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::Validation, message);
}

}  // namespace eldertrack
