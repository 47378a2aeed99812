#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spiderweb {

enum class ErrorCode {
  invalid_spec,
  placement,
  unreachable_foot,
  numeric_fault,
  divergence,
  settle_failure,
  parameter,
  no_transient,
  insufficient_data,
  grid_mismatch,
  config,
  io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_spec: return "InvalidSpec";
    case ErrorCode::placement: return "PlacementError";
    case ErrorCode::unreachable_foot: return "UnreachableFoot";
    case ErrorCode::numeric_fault: return "NumericFault";
    case ErrorCode::divergence: return "Divergence";
    case ErrorCode::settle_failure: return "SettleFailure";
    case ErrorCode::parameter: return "ParameterError";
    case ErrorCode::no_transient: return "NoTransient";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::grid_mismatch: return "GridMismatch";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::io: return "FileError";
  }
  return "Unknown";
}

/// Process exit code for the CLI: 2 config, 3 simulation, 4 analysis, 1 file I/O.
constexpr int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_spec:
    case ErrorCode::placement:
    case ErrorCode::unreachable_foot:
    case ErrorCode::config:
      return 2;
    case ErrorCode::numeric_fault:
    case ErrorCode::divergence:
    case ErrorCode::settle_failure:
      return 3;
    case ErrorCode::parameter:
    case ErrorCode::no_transient:
    case ErrorCode::insufficient_data:
    case ErrorCode::grid_mismatch:
      return 4;
    case ErrorCode::io:
      return 1;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace spiderweb
