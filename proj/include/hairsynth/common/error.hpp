#pragma once

#include <stdexcept>
#include <string>

namespace hairsynth {

enum class errc {
  invalid_argument,
  degenerate_kernel,
  extent_mismatch,
  non_finite,
  empty_mask,
  degenerate_stroke,
  shape_mismatch,
  untrained,
  phase_violation,
  io,
  decode,
  unknown_session,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::degenerate_kernel: return "degenerate_kernel";
    case errc::extent_mismatch: return "extent_mismatch";
    case errc::non_finite: return "non_finite";
    case errc::empty_mask: return "empty_mask";
    case errc::degenerate_stroke: return "degenerate_stroke";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::untrained: return "untrained";
    case errc::phase_violation: return "phase_violation";
    case errc::io: return "io";
    case errc::decode: return "decode";
    case errc::unknown_session: return "unknown_session";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace hairsynth
