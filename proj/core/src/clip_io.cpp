#include <cmath>

#include <json.hpp>

#include "detail/number_format.hpp"
#include "fewskel/clip.hpp"
#include "fewskel/error.hpp"
#include "fewskel/file_util.hpp"

namespace fewskel {
namespace {

using nlohmann::json;

double number_at(const json& v, const char* what) {
  if (!v.is_number()) throw Error(ErrorCode::malformed_json, std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorCode::non_finite, std::string(what) + " is not finite");
  return d;
}

template <std::size_t N>
std::array<double, N> point_from(const json& v) {
  if (!v.is_array() || v.size() != N) {
    throw Error(ErrorCode::malformed_json, "joint must have " + std::to_string(N) + " coordinates");
  }
  std::array<double, N> p{};
  for (std::size_t i = 0; i < N; ++i) p[i] = number_at(v[i], "coordinate");
  return p;
}

void require_joint_count(const json& frame, std::size_t index) {
  if (!frame.is_array()) throw Error(ErrorCode::malformed_json, "frame must be an array");
  if (frame.size() != kJointCount) {
    throw Error(ErrorCode::joint_count, "frame " + std::to_string(index) + " has " +
                                            std::to_string(frame.size()) + " joints, expected 17");
  }
}

std::vector<std::optional<Frame2D>> frames2d_from(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::malformed_json, "joints2d must be an array or null");
  std::vector<std::optional<Frame2D>> out;
  out.reserve(arr.size());
  for (std::size_t f = 0; f < arr.size(); ++f) {
    if (arr[f].is_null()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    require_joint_count(arr[f], f);
    Frame2D frame;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (arr[f][j].is_null()) {
        frame[j] = std::nullopt;
      } else {
        frame[j] = point_from<2>(arr[f][j]);
      }
    }
    out.emplace_back(frame);
  }
  return out;
}

std::vector<Frame3D> frames3d_from(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::malformed_json, "joints3d must be an array or null");
  std::vector<Frame3D> out;
  out.reserve(arr.size());
  for (std::size_t f = 0; f < arr.size(); ++f) {
    require_joint_count(arr[f], f);
    Frame3D frame;
    for (std::size_t j = 0; j < kJointCount; ++j) frame[j] = point_from<3>(arr[f][j]);
    out.push_back(frame);
  }
  return out;
}

template <std::size_t N>
void append_point(std::string& out, const std::array<double, N>& p) {
  out += '[';
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ',';
    detail::append_double(out, p[i]);
  }
  out += ']';
}

void append_frames2d(std::string& out, const std::vector<std::optional<Frame2D>>& frames) {
  out += '[';
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (f) out += ',';
    if (!frames[f]) {
      out += "null";
      continue;
    }
    out += '[';
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (j) out += ',';
      if ((*frames[f])[j]) {
        append_point(out, *(*frames[f])[j]);
      } else {
        out += "null";
      }
    }
    out += ']';
  }
  out += ']';
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::out_of_range& e) {
    // A literal such as 1e400 overflows to infinity.
    throw Error(ErrorCode::non_finite, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, e.what());
  }
}

}  // namespace

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::manual: return "manual";
    case Provenance::imported: return "imported";
    case Provenance::synthetic: return "synthetic";
  }
  return "manual";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "manual") return Provenance::manual;
  if (s == "imported") return Provenance::imported;
  if (s == "synthetic") return Provenance::synthetic;
  throw Error(ErrorCode::validation, "unknown provenance '" + std::string(s) + "'");
}

std::size_t ClipRecord::frame_count() const noexcept {
  if (joints3d) return joints3d->size();
  if (joints2d) return joints2d->size();
  return 0;
}

void validate_clip(const ClipRecord& clip) {
  if (!clip.joints2d && !clip.joints3d) {
    throw Error(ErrorCode::validation, "clip has neither joints2d nor joints3d");
  }
  if (clip.joints2d && clip.joints3d && clip.joints2d->size() != clip.joints3d->size()) {
    throw Error(ErrorCode::frame_mismatch, "joints2d and joints3d frame counts differ");
  }
  if (clip.joints2d) {
    for (const auto& frame : *clip.joints2d) {
      if (!frame) continue;
      for (const auto& joint : *frame) {
        if (joint && (!std::isfinite((*joint)[0]) || !std::isfinite((*joint)[1]))) {
          throw Error(ErrorCode::non_finite, "non-finite 2D coordinate");
        }
      }
    }
  }
  if (clip.joints3d) {
    for (const auto& frame : *clip.joints3d) {
      for (const auto& joint : frame) {
        for (const double c : joint) {
          if (!std::isfinite(c)) throw Error(ErrorCode::non_finite, "non-finite 3D coordinate");
        }
      }
    }
  }
}

std::string serialize_joints2d(const std::vector<std::optional<Frame2D>>& frames) {
  std::string out;
  append_frames2d(out, frames);
  return out;
}

std::vector<std::optional<Frame2D>> parse_joints2d(std::string_view text) {
  return frames2d_from(parse_json(text));
}

std::string serialize_clip(const ClipRecord& clip) {
  validate_clip(clip);
  std::string out = "{\"format_version\":" + std::to_string(kClipFormatVersion) + ",\"action\":";
  detail::append_json_string(out, clip.action);
  out += ",\"video_id\":";
  detail::append_json_string(out, clip.video_id);
  out += ",\"globally_aligned\":";
  out += clip.globally_aligned ? "true" : "false";
  out += ",\"joints2d\":";
  if (clip.joints2d) {
    append_frames2d(out, *clip.joints2d);
  } else {
    out += "null";
  }
  out += ",\"joints3d\":";
  if (clip.joints3d) {
    out += '[';
    for (std::size_t f = 0; f < clip.joints3d->size(); ++f) {
      if (f) out += ',';
      out += '[';
      for (std::size_t j = 0; j < kJointCount; ++j) {
        if (j) out += ',';
        append_point(out, (*clip.joints3d)[f][j]);
      }
      out += ']';
    }
    out += ']';
  } else {
    out += "null";
  }
  out += ",\"provenance\":";
  detail::append_json_string(out, std::string(to_string(clip.provenance)));
  out += "}\n";
  return out;
}

ClipRecord parse_clip(std::string_view text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw Error(ErrorCode::malformed_json, "clip must be a JSON object");
  try {
    if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
      throw Error(ErrorCode::malformed_json, "missing integer format_version");
    }
    if (j.at("format_version").get<int>() != kClipFormatVersion) {
      throw Error(ErrorCode::format_version,
                  "unsupported clip format_version " + j.at("format_version").dump());
    }
    ClipRecord clip;
    clip.action = j.at("action").get<std::string>();
    clip.video_id = j.at("video_id").get<std::string>();
    clip.globally_aligned = j.at("globally_aligned").get<bool>();
    const json& j2 = j.contains("joints2d") ? j.at("joints2d") : json();
    const json& j3 = j.contains("joints3d") ? j.at("joints3d") : json();
    if (!j2.is_null()) clip.joints2d = frames2d_from(j2);
    if (!j3.is_null()) clip.joints3d = frames3d_from(j3);
    clip.provenance = parse_provenance(j.at("provenance").get<std::string>());
    validate_clip(clip);
    return clip;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, e.what());
  }
}

void save_clip(const ClipRecord& clip, const std::filesystem::path& path) {
  const std::string text = serialize_clip(clip);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

ClipRecord load_clip(const std::filesystem::path& path) {
  try {
    return parse_clip(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

SkeletonSequence to_sequence(const ClipRecord& clip) {
  validate_clip(clip);
  SkeletonSequence seq;
  seq.label = clip.action;
  seq.video_id = clip.video_id;
  seq.aligned = clip.globally_aligned;
  if (clip.joints3d) {
    for (const Frame3D& f : *clip.joints3d) {
      SkeletonFrame frame;
      for (std::size_t j = 0; j < kJointCount; ++j) frame.joints[j] = Vec3(f[j][0], f[j][1], f[j][2]);
      seq.frames.push_back(frame);
    }
  } else {
    for (std::size_t i = 0; i < clip.joints2d->size(); ++i) {
      const auto& f = (*clip.joints2d)[i];
      SkeletonFrame frame;
      for (std::size_t j = 0; j < kJointCount; ++j) {
        if (!f || !(*f)[j]) {
          throw Error(ErrorCode::missing_joints,
                      "frame " + std::to_string(i) + " of " + clip.video_id + " is incomplete");
        }
        frame.joints[j] = Vec3((*(*f)[j])[0], (*(*f)[j])[1], 0.0);
      }
      seq.frames.push_back(frame);
    }
  }
  return seq;
}

ClipRecord clip_from_sequence(const SkeletonSequence& seq, Provenance provenance) {
  ClipRecord clip;
  clip.action = seq.label;
  clip.video_id = seq.video_id;
  clip.globally_aligned = seq.aligned;
  clip.provenance = provenance;
  std::vector<Frame3D> frames;
  frames.reserve(seq.frames.size());
  for (const SkeletonFrame& f : seq.frames) {
    Frame3D out;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      out[j] = {f.joints[j].x(), f.joints[j].y(), f.joints[j].z()};
    }
    frames.push_back(out);
  }
  clip.joints3d = std::move(frames);
  return clip;
}

std::filesystem::path clip_path(const std::filesystem::path& root, const std::string& action,
                                const std::string& video_id) {
  return root / action / (video_id + ".json");
}

}  // namespace fewskel
