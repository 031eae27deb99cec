#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fewskel {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr std::size_t kJointCount = 17;
inline constexpr std::size_t kBoneCount = kJointCount - 1;

struct Bone {
  int parent = 0;
  int child = 0;
};

/// Joint labels and the bone tree B. Bones are kept in an order where every
/// parent is placed before its children, so a single forward pass rebuilds
/// joints from bone vectors.
class Topology {
 public:
  Topology(std::vector<std::string> joint_names, std::vector<Bone> bones, int root_index);

  /// 17-joint Human3.6M-style tree rooted at the pelvis (lower spine).
  static const Topology& human36m();

  const std::vector<std::string>& joint_names() const noexcept { return joint_names_; }
  const std::vector<Bone>& bones() const noexcept { return bones_; }
  int root_index() const noexcept { return root_; }
  int joint_index(const std::string& name) const;

 private:
  std::vector<std::string> joint_names_;
  std::vector<Bone> bones_;
  int root_;
};

Topology load_topology(const std::filesystem::path& path);
std::string topology_to_json(const Topology& topology);

/// Azimuth/altitude of an orthographic camera relative to the default camera.
/// theta in (-pi, pi], phi in [-pi/2, pi/2].
struct CameraAngles {
  double theta = 0.0;
  double phi = 0.0;
};

struct SkeletonFrame {
  std::array<Vec3, kJointCount> joints;

  static SkeletonFrame zero();
};

struct SkeletonSequence {
  std::vector<SkeletonFrame> frames;
  std::string label;
  std::string video_id;
  bool aligned = false;
  // Ground-truth view recorded by augment_view.
  std::optional<CameraAngles> source_view;

  std::size_t size() const noexcept { return frames.size(); }
};

struct BoneVector {
  std::size_t bone_index = 0;
  Vec3 vector;
};

std::vector<BoneVector> bone_vectors(const SkeletonFrame& frame,
                                     const Topology& topology = Topology::human36m());

/// Vector of |b_i| over the topology's bones.
Eigen::VectorXd bone_lengths(const SkeletonFrame& frame,
                             const Topology& topology = Topology::human36m());

void check_finite(const SkeletonSequence& seq);

/// Applies R to every joint of every frame.
SkeletonSequence rotate_sequence(const Mat3& rotation, const SkeletonSequence& seq);

}  // namespace fewskel
