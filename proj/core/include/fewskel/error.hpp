#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fewskel {

enum class ErrorCode {
  validation,
  degenerate_reference,
  scale_undefined,
  contract,
  malformed_json,
  joint_count,
  non_finite,
  missing_joints,
  format_version,
  split,
  configuration,
  frame_mismatch,
  io,
  training_diverged,
  not_found,
  conflict,
  missing_frames,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every library failure carries a code so callers (CLI exit status, HTTP
/// status) can dispatch on the class of error rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fewskel
