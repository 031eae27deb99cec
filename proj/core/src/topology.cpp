#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fewskel/error.hpp"
#include "fewskel/skeleton.hpp"

namespace fewskel {

Topology::Topology(std::vector<std::string> joint_names, std::vector<Bone> bones,
                   int root_index)
    : joint_names_(std::move(joint_names)), bones_(), root_(root_index) {
  const int n = static_cast<int>(joint_names_.size());
  if (joint_names_.size() != kJointCount) {
    throw Error(ErrorCode::validation,
                "topology must have exactly 17 joints, got " + std::to_string(n));
  }
  if (bones.size() != kBoneCount) {
    throw Error(ErrorCode::validation, "topology must have exactly 16 bones");
  }
  if (root_ < 0 || root_ >= n) throw Error(ErrorCode::validation, "root index out of range");

  std::vector<int> parent_of(n, -1);
  for (const Bone& b : bones) {
    if (b.parent < 0 || b.parent >= n || b.child < 0 || b.child >= n || b.parent == b.child) {
      throw Error(ErrorCode::validation, "bone index out of range");
    }
    if (b.child == root_) throw Error(ErrorCode::validation, "root joint cannot be a child");
    if (parent_of[b.child] != -1) {
      throw Error(ErrorCode::validation,
                  "joint '" + joint_names_[b.child] + "' is the child of two bones");
    }
    parent_of[b.child] = b.parent;
  }

  // Order bones root-outward; anything unreachable means the bones are not a tree.
  std::vector<bool> placed(n, false);
  placed[root_] = true;
  std::vector<bool> used(bones.size(), false);
  bool progress = true;
  while (bones_.size() < bones.size() && progress) {
    progress = false;
    for (std::size_t i = 0; i < bones.size(); ++i) {
      if (!used[i] && placed[bones[i].parent]) {
        used[i] = true;
        placed[bones[i].child] = true;
        bones_.push_back(bones[i]);
        progress = true;
      }
    }
  }
  if (bones_.size() != bones.size()) {
    throw Error(ErrorCode::validation, "bones do not form a tree rooted at the root joint");
  }
}

const Topology& Topology::human36m() {
  static const Topology topology(
      {"pelvis", "right_hip", "right_knee", "right_ankle", "left_hip", "left_knee",
       "left_ankle", "spine", "thorax", "neck", "head", "left_shoulder", "left_elbow",
       "left_wrist", "right_shoulder", "right_elbow", "right_wrist"},
      {{0, 1}, {1, 2}, {2, 3}, {0, 4}, {4, 5}, {5, 6}, {0, 7}, {7, 8},
       {8, 9}, {9, 10}, {8, 11}, {11, 12}, {12, 13}, {8, 14}, {14, 15}, {15, 16}},
      0);
  return topology;
}

int Topology::joint_index(const std::string& name) const {
  for (std::size_t i = 0; i < joint_names_.size(); ++i) {
    if (joint_names_[i] == name) return static_cast<int>(i);
  }
  throw Error(ErrorCode::not_found, "unknown joint '" + name + "'");
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open topology file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    std::vector<Bone> bones;
    for (const auto& b : j.at("bones")) {
      bones.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
    }
    return Topology(j.at("joint_names").get<std::vector<std::string>>(), std::move(bones),
                    j.at("root_index").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_json, path.string() + ": " + e.what());
  }
}

std::string topology_to_json(const Topology& topology) {
  nlohmann::ordered_json j;
  j["joint_names"] = topology.joint_names();
  auto bones = nlohmann::ordered_json::array();
  for (const Bone& b : topology.bones()) bones.push_back({b.parent, b.child});
  j["bones"] = bones;
  j["root_index"] = topology.root_index();
  return j.dump(2) + "\n";
}

SkeletonFrame SkeletonFrame::zero() {
  SkeletonFrame f;
  for (auto& j : f.joints) j.setZero();
  return f;
}

std::vector<BoneVector> bone_vectors(const SkeletonFrame& frame, const Topology& topology) {
  std::vector<BoneVector> out;
  out.reserve(topology.bones().size());
  for (std::size_t i = 0; i < topology.bones().size(); ++i) {
    const Bone& b = topology.bones()[i];
    out.push_back({i, frame.joints[b.child] - frame.joints[b.parent]});
  }
  return out;
}

Eigen::VectorXd bone_lengths(const SkeletonFrame& frame, const Topology& topology) {
  Eigen::VectorXd lengths(topology.bones().size());
  for (std::size_t i = 0; i < topology.bones().size(); ++i) {
    const Bone& b = topology.bones()[i];
    lengths[static_cast<Eigen::Index>(i)] = (frame.joints[b.child] - frame.joints[b.parent]).norm();
  }
  return lengths;
}

void check_finite(const SkeletonSequence& seq) {
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (!seq.frames[f].joints[j].allFinite()) {
        throw Error(ErrorCode::validation, "non-finite coordinate at frame " + std::to_string(f) +
                                               ", joint " + std::to_string(j));
      }
    }
  }
}

SkeletonSequence rotate_sequence(const Mat3& rotation, const SkeletonSequence& seq) {
  SkeletonSequence out = seq;
  for (auto& frame : out.frames) {
    for (auto& joint : frame.joints) joint = rotation * joint;
  }
  return out;
}

}  // namespace fewskel
