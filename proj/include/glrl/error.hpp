#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glrl {

enum class ErrorCode {
  InvalidInput,
  NotPSD,
  Diverged,
  BlowUp,
  NoEscape,
  NoAlignment,
  Infeasible,
  Unsupported,
  ClassificationMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; every failing library call
/// throws this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Finite-time blow-up of one coordinate of a closed-form trajectory.
class BlowUpError : public Error {
 public:
  BlowUpError(int index, double time)
      : Error(ErrorCode::BlowUp, "component " + std::to_string(index) +
                                     " blows up at t=" + std::to_string(time)),
        index_(index),
        time_(time) {}

  int index() const noexcept { return index_; }
  double time() const noexcept { return time_; }

 private:
  int index_;
  double time_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace glrl
