#pragma once

#include <stdexcept>
#include <string>

namespace roughvar {

/// Failure category. Maps onto CLI exit codes: validation -> 1,
/// numerical -> 2, io -> 3.
enum class ErrorCode {
  invalid_refinement,
  resolution,
  invalid_argument,
  source,
  insufficient_data,
  bracket,
  inconclusive,
  numerical,
  grid_mismatch,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  bool is_validation() const noexcept {
    switch (code_) {
      case ErrorCode::invalid_refinement:
      case ErrorCode::resolution:
      case ErrorCode::invalid_argument:
      case ErrorCode::source:
      case ErrorCode::insufficient_data:
      case ErrorCode::grid_mismatch:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_refinement: return "invalid_refinement";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::source: return "source";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::bracket: return "bracket";
    case ErrorCode::inconclusive: return "inconclusive";
    case ErrorCode::numerical: return "numerical";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace roughvar
