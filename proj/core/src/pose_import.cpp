#include "fewskel/pose_import.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <json.hpp>

#include "fewskel/error.hpp"
#include "fewskel/file_util.hpp"

namespace fewskel {
namespace {

using nlohmann::json;

std::size_t frame_number(const json& image_id) {
  if (image_id.is_number_unsigned()) return image_id.get<std::size_t>();
  const std::string s = image_id.get<std::string>();
  const std::string stem = std::filesystem::path(s).stem().string();
  std::string digits;
  for (auto it = stem.rbegin(); it != stem.rend() && std::isdigit(static_cast<unsigned char>(*it)); ++it) {
    digits.insert(digits.begin(), *it);
  }
  if (digits.empty()) throw Error(ErrorCode::validation, "image_id '" + s + "' has no frame number");
  return std::stoull(digits);
}

}  // namespace

const KeypointMapping& coco_to_human36m() {
  static const KeypointMapping mapping = {-1, 12, 14, 16, 11, 13, 15, -1, -1,
                                          0,  -1, 5,  7,  9,  6,  8,  10};
  return mapping;
}

KeypointMapping parse_keypoint_mapping(std::string_view text) {
  try {
    const json j = json::parse(text);
    const json& arr = j.is_object() ? j.at("mapping") : j;
    if (!arr.is_array() || arr.size() != kJointCount) {
      throw Error(ErrorCode::joint_count, "keypoint mapping must have 17 entries");
    }
    KeypointMapping m{};
    for (std::size_t i = 0; i < kJointCount; ++i) m[i] = arr[i].is_null() ? -1 : arr[i].get<int>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, std::string("keypoint mapping: ") + e.what());
  }
}

KeypointMapping load_keypoint_mapping(const std::filesystem::path& path) {
  return parse_keypoint_mapping(read_file(path));
}

ImportResult import_pose_predictions(std::string_view text, const KeypointMapping& mapping,
                                     const ImportOptions& options) {
  json detections;
  try {
    detections = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, std::string("pose predictions: ") + e.what());
  }
  if (!detections.is_array()) {
    throw Error(ErrorCode::malformed_json, "pose predictions must be a JSON array");
  }

  struct Best {
    double score;
    Frame2D joints;
  };
  std::map<std::size_t, Best> best;
  try {
    for (const json& det : detections) {
      const std::size_t frame = frame_number(det.at("image_id"));
      const auto& kp = det.at("keypoints");
      if (!kp.is_array() || kp.size() % 3 != 0) {
        throw Error(ErrorCode::malformed_json, "keypoints must be (x, y, confidence) triples");
      }
      const std::size_t n_ext = kp.size() / 3;
      double score = 0.0;
      if (det.contains("score")) {
        score = det.at("score").get<double>();
      } else {
        for (std::size_t k = 0; k < n_ext; ++k) score += kp[3 * k + 2].get<double>();
        score /= static_cast<double>(std::max<std::size_t>(n_ext, 1));
      }
      Frame2D joints;
      for (std::size_t j = 0; j < kJointCount; ++j) {
        const int ext = mapping[j];
        if (ext < 0) continue;
        if (static_cast<std::size_t>(ext) >= n_ext) {
          throw Error(ErrorCode::joint_count, "mapping refers to keypoint " + std::to_string(ext) +
                                                  " but detections have " + std::to_string(n_ext));
        }
        joints[j] = Point2{kp[3 * ext].get<double>(), kp[3 * ext + 1].get<double>()};
      }
      auto it = best.find(frame);
      if (it == best.end() || score > it->second.score) best[frame] = Best{score, joints};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, std::string("pose predictions: ") + e.what());
  }

  std::size_t frames = options.frame_count.value_or(best.empty() ? 0 : best.rbegin()->first + 1);
  if (!best.empty() && best.rbegin()->first >= frames) {
    throw Error(ErrorCode::frame_mismatch, "detection frame index exceeds frame count");
  }

  ImportResult out;
  out.clip.action = options.action;
  out.clip.video_id = options.video_id;
  out.clip.provenance = Provenance::imported;
  std::vector<std::optional<Frame2D>> joints(frames);
  out.frame_scores.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    auto it = best.find(f);
    if (it == best.end()) {
      out.unannotated_frames.push_back(f);
      continue;
    }
    joints[f] = it->second.joints;
    out.frame_scores[f] = it->second.score;
  }
  out.clip.joints2d = std::move(joints);
  validate_clip(out.clip);
  return out;
}

ImportResult import_pose_predictions(const std::filesystem::path& path,
                                     const KeypointMapping& mapping, const ImportOptions& options) {
  return import_pose_predictions(std::string_view(read_file(path)), mapping, options);
}

}  // namespace fewskel
