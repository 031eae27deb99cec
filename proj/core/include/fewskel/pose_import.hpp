#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fewskel/clip.hpp"

namespace fewskel {

/// For each of our 17 joints, the index of the external keypoint that feeds
/// it, or -1 when the external format has no equivalent (left for manual
/// completion).
using KeypointMapping = std::array<int, kJointCount>;

/// COCO-17 (AlphaPose default) to our topology. Pelvis, spine, thorax and head
/// have no COCO counterpart.
const KeypointMapping& coco_to_human36m();

KeypointMapping load_keypoint_mapping(const std::filesystem::path& path);
KeypointMapping parse_keypoint_mapping(std::string_view text);

struct ImportOptions {
  std::string action;
  std::string video_id;
  std::optional<std::size_t> frame_count;  // defaults to last detected frame + 1
};

struct ImportResult {
  ClipRecord clip;
  std::vector<std::optional<double>> frame_scores;  // selected person's score
  std::vector<std::size_t> unannotated_frames;
};

/// Reads AlphaPose-style results: a JSON array of detections
/// {"image_id", "keypoints": [x, y, c, ...], "score"}. Frames are numbered by
/// the integer in the image id's stem. The best-scoring person per frame is
/// kept; frames without a detection become unannotated.
ImportResult import_pose_predictions(std::string_view text, const KeypointMapping& mapping,
                                     const ImportOptions& options);
ImportResult import_pose_predictions(const std::filesystem::path& path,
                                     const KeypointMapping& mapping, const ImportOptions& options);

}  // namespace fewskel
