#include "fewskel/standardize.hpp"

#include <string>

#include "fewskel/error.hpp"

namespace fewskel {
namespace {

void require_frames(const SkeletonSequence& seq) {
  if (seq.frames.empty()) throw Error(ErrorCode::validation, "sequence has no frames");
}

}  // namespace

SkeletonSequence center_at_root(const SkeletonSequence& seq, const Topology& topology) {
  require_frames(seq);
  check_finite(seq);
  SkeletonSequence out = seq;
  for (auto& frame : out.frames) {
    const Vec3 offset = frame.joints[topology.root_index()];
    for (auto& joint : frame.joints) joint -= offset;
  }
  return out;
}

SkeletonSequence unify_bone_lengths(const SkeletonSequence& seq, const Topology& topology) {
  require_frames(seq);
  check_finite(seq);
  const auto& bones = topology.bones();
  const Eigen::VectorXd reference = bone_lengths(seq.frames.front(), topology);
  for (Eigen::Index i = 0; i < reference.size(); ++i) {
    if (reference[i] == 0.0) {
      throw Error(ErrorCode::degenerate_reference,
                  "bone " + topology.joint_names()[bones[i].parent] + "->" +
                      topology.joint_names()[bones[i].child] + " has zero length in frame 1");
    }
  }

  SkeletonSequence out = seq;
  std::vector<Vec3> previous_dirs(bones.size());
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const SkeletonFrame& src = seq.frames[f];
    SkeletonFrame& dst = out.frames[f];
    dst.joints[topology.root_index()] = src.joints[topology.root_index()];
    for (std::size_t i = 0; i < bones.size(); ++i) {
      const Vec3 b = src.joints[bones[i].child] - src.joints[bones[i].parent];
      const double len = b.norm();
      Vec3 dir;
      if (len > 0.0) {
        dir = b / len;
      } else {
        // f > 0 here: frame 1 was checked above.
        dir = previous_dirs[i];
      }
      previous_dirs[i] = dir;
      dst.joints[bones[i].child] =
          dst.joints[bones[i].parent] + reference[static_cast<Eigen::Index>(i)] * dir;
    }
  }
  return out;
}

SkeletonSequence normalize_scale(const SkeletonSequence& seq, const Topology& topology) {
  require_frames(seq);
  check_finite(seq);
  const double norm = bone_lengths(seq.frames.front(), topology).norm();
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::scale_undefined, "frame-1 bone lengths are all zero");
  }
  SkeletonSequence out = seq;
  const double scale = 1.0 / norm;
  for (auto& frame : out.frames) {
    for (auto& joint : frame.joints) joint *= scale;
  }
  return out;
}

SkeletonSequence standardize(const SkeletonSequence& seq, const Topology& topology) {
  return normalize_scale(unify_bone_lengths(center_at_root(seq, topology), topology), topology);
}

}  // namespace fewskel
