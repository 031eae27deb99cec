#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fewskel/skeleton.hpp"

namespace fewskel {

/// Default orthographic camera position.
inline const Vec3 kDefaultCamera{0.0, 0.0, -1.0};

/// Cross-product matrix: skew(n) * v == n.cross(v). Requires |n| = 1 to 1e-6.
Mat3 skew(const Vec3& axis);

/// I + sin(a) K + (1 - cos(a)) K^2 with K = skew(axis).
Mat3 rodrigues(const Vec3& axis, double angle);

/// Azimuth/altitude of a unit camera position. Azimuth is taken as
/// pi - atan2(x, z) wrapped into (-pi, pi]; at the poles (x = z = 0) it is
/// degenerate and reported as 0.
CameraAngles angles_from_camera(const Vec3& camera);

/// R = R2 * R1: R1 turns by theta about -y, R2 tilts by |phi| towards +y
/// (or -y) about the horizontal axis perpendicular to R1 * C_D.
Mat3 rotation_from_angles(const CameraAngles& angles);

/// rotation_from_angles(angles) * C_D.
Vec3 camera_from_angles(const CameraAngles& angles);

/// R(angles) together with its partial derivatives, for gradient-based fitting.
struct RotationJacobian {
  Mat3 rotation;
  Mat3 d_theta;
  Mat3 d_phi;
};
RotationJacobian rotation_jacobian(const CameraAngles& angles);

/// Renders an aligned sequence as seen from the camera: every joint is
/// multiplied by R(view)^T. Requires seq.aligned; the result is flagged
/// unaligned and remembers `view` as its ground truth.
SkeletonSequence augment_view(const SkeletonSequence& aligned, const CameraAngles& view);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Largest component-wise difference |d theta| (wrapped), |d phi|.
double angle_difference(const CameraAngles& a, const CameraAngles& b);

/// Geodesic distance on SO(3) between R(a) and R(b), in radians.
double rotation_distance(const CameraAngles& a, const CameraAngles& b);

struct ViewSphere {
  int frequency = 0;
  std::vector<Vec3> vertices;
};

/// Geodesic frequency-n subdivision of an icosahedron with vertices on the
/// +-y axis; 10 n^2 + 2 unit vertices. The 12 base vertices come first.
ViewSphere icosahedron_vertices(int frequency);

struct ViewSplit {
  std::vector<std::size_t> train;  // 73 vertex indices, ascending
  std::vector<std::size_t> test;   // 19 vertex indices, ascending
};

inline constexpr std::size_t kTrainViewCount = 73;
inline constexpr std::size_t kTestViewCount = 19;

/// Seeded partition of a 92-vertex sphere into 73 training and 19 test views.
ViewSplit split_views(const ViewSphere& sphere, std::uint64_t seed);

std::vector<CameraAngles> vertex_angles(const ViewSphere& sphere,
                                        const std::vector<std::size_t>& indices);

std::string view_sphere_to_json(const ViewSphere& sphere);

}  // namespace fewskel
