#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fewskel/skeleton.hpp"

namespace fewskel {

inline constexpr int kClipFormatVersion = 1;

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;

/// One annotated 2D frame. A joint is std::nullopt when it has not been
/// labeled yet; a whole frame is std::nullopt when nothing was detected.
using Frame2D = std::array<std::optional<Point2>, kJointCount>;
using Frame3D = std::array<Point3, kJointCount>;

enum class Provenance { manual, imported, synthetic };

std::string_view to_string(Provenance p) noexcept;
Provenance parse_provenance(std::string_view s);

struct ClipRecord {
  std::string action;
  std::string video_id;
  bool globally_aligned = false;
  std::optional<std::vector<std::optional<Frame2D>>> joints2d;
  std::optional<std::vector<Frame3D>> joints3d;
  Provenance provenance = Provenance::manual;

  std::size_t frame_count() const noexcept;
  bool operator==(const ClipRecord&) const = default;
};

/// Throws validation / joint_count / non_finite / frame_mismatch.
void validate_clip(const ClipRecord& clip);

/// Canonical form: keys in fixed order, numbers with 17 significant digits,
/// no whitespace, trailing newline.
std::string serialize_clip(const ClipRecord& clip);
ClipRecord parse_clip(std::string_view text);

void save_clip(const ClipRecord& clip, const std::filesystem::path& path);
ClipRecord load_clip(const std::filesystem::path& path);

/// Canonical JSON for a joints2d array alone (used by the annotation API).
std::string serialize_joints2d(const std::vector<std::optional<Frame2D>>& frames);
std::vector<std::optional<Frame2D>> parse_joints2d(std::string_view text);

/// Sequence from joints3d (or joints2d with z = 0 when no 3D data exists).
/// Throws missing_joints if a 2D frame is incomplete.
SkeletonSequence to_sequence(const ClipRecord& clip);

/// Inverse of to_sequence for 3D data.
ClipRecord clip_from_sequence(const SkeletonSequence& seq, Provenance provenance);

/// `<root>/<action>/<video_id>.json`
std::filesystem::path clip_path(const std::filesystem::path& root, const std::string& action,
                                const std::string& video_id);

}  // namespace fewskel
