#include "fewskel/error.hpp"

namespace fewskel {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::degenerate_reference: return "degenerate_reference";
    case ErrorCode::scale_undefined: return "scale_undefined";
    case ErrorCode::contract: return "contract";
    case ErrorCode::malformed_json: return "malformed_json";
    case ErrorCode::joint_count: return "joint_count";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::missing_joints: return "missing_joints";
    case ErrorCode::format_version: return "format_version";
    case ErrorCode::split: return "split";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::frame_mismatch: return "frame_mismatch";
    case ErrorCode::io: return "io";
    case ErrorCode::training_diverged: return "training_diverged";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::missing_frames: return "missing_frames";
  }
  return "unknown";
}

}  // namespace fewskel
