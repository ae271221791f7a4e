#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pearcey {

/// Failure categories shared by every module. The CLI maps them to exit codes.
enum class ErrorKind {
  invalid_argument,
  precision_loss,
  domain,
  grid_degeneracy,
  under_resolution,
  cost_guard,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::precision_loss: return "precision-loss";
    case ErrorKind::domain: return "domain";
    case ErrorKind::grid_degeneracy: return "grid-degeneracy";
    case ErrorKind::under_resolution: return "under-resolution";
    case ErrorKind::cost_guard: return "cost-guard";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace pearcey
