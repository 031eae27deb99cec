#include "fewskel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "detail/number_format.hpp"
#include "fewskel/error.hpp"
#include "fewskel/random.hpp"

namespace fewskel {
namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr double kPi = std::numbers::pi;

void require_unit(const Vec3& v, const char* what) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::validation, std::string(what) + " must be a unit vector");
  }
}

const Vec3 kAzimuthAxis{0.0, -1.0, 0.0};
const Vec3 kUp{0.0, 1.0, 0.0};

// Tilt axis perpendicular to the horizontal viewing direction. Paper form
// picks v2 x v1 for phi > 0 and v1 x v2 otherwise together with |phi|; that
// equals a rotation by the signed phi about v2 x v1, used here.
Vec3 tilt_axis(const Mat3& r1) {
  const Vec3 v2 = r1 * kDefaultCamera;
  Vec3 axis = v2.cross(kUp);
  const double n = axis.norm();
  if (n < 1e-12) {
    // v2 is horizontal by construction, so this only guards against misuse.
    return r1 * Vec3::UnitX();
  }
  return axis / n;
}

}  // namespace

Mat3 skew(const Vec3& axis) {
  require_unit(axis, "skew axis");
  Mat3 k;
  k << 0.0, -axis.z(), axis.y(),
       axis.z(), 0.0, -axis.x(),
       -axis.y(), axis.x(), 0.0;
  return k;
}

Mat3 rodrigues(const Vec3& axis, double angle) {
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

CameraAngles angles_from_camera(const Vec3& camera) {
  require_unit(camera, "camera position");
  const double horizontal = std::hypot(camera.x(), camera.z());
  CameraAngles out;
  if (horizontal < 1e-12) {
    out.theta = 0.0;
  } else {
    double theta = kPi - std::atan2(camera.x(), camera.z());
    if (theta > kPi) theta -= 2.0 * kPi;
    out.theta = theta;
  }
  out.phi = std::atan2(camera.y(), horizontal);
  return out;
}

Mat3 rotation_from_angles(const CameraAngles& angles) {
  if (!std::isfinite(angles.theta) || !std::isfinite(angles.phi)) {
    throw Error(ErrorCode::validation, "camera angles must be finite");
  }
  const Mat3 r1 = rodrigues(kAzimuthAxis, angles.theta);
  const Vec3 v2 = r1 * kDefaultCamera;
  Vec3 n2 = angles.phi > 0.0 ? v2.cross(kUp) : kUp.cross(v2);
  const double len = n2.norm();
  n2 = len < 1e-12 ? Vec3(r1 * Vec3::UnitX()) : Vec3(n2 / len);
  const Mat3 r2 = rodrigues(n2, std::abs(angles.phi));
  return r2 * r1;
}

Vec3 camera_from_angles(const CameraAngles& angles) {
  return rotation_from_angles(angles) * kDefaultCamera;
}

RotationJacobian rotation_jacobian(const CameraAngles& angles) {
  const double st = std::sin(angles.theta), ct = std::cos(angles.theta);
  const double sp = std::sin(angles.phi), cp = std::cos(angles.phi);

  const Mat3 k1 = skew(kAzimuthAxis);
  const Mat3 k1sq = k1 * k1;
  const Mat3 r1 = Mat3::Identity() + st * k1 + (1.0 - ct) * k1sq;
  const Mat3 dr1 = ct * k1 + st * k1sq;

  // a(theta) = (R1 C_D) x up has unit length for every theta.
  const Vec3 a = tilt_axis(r1);
  const Vec3 da = (dr1 * kDefaultCamera).cross(kUp);
  const Mat3 k2 = skew(a);
  Mat3 dk2;
  dk2 << 0.0, -da.z(), da.y(),
         da.z(), 0.0, -da.x(),
         -da.y(), da.x(), 0.0;
  const Mat3 k2sq = k2 * k2;
  const Mat3 r2 = Mat3::Identity() + sp * k2 + (1.0 - cp) * k2sq;
  const Mat3 dr2_dtheta = sp * dk2 + (1.0 - cp) * (dk2 * k2 + k2 * dk2);
  const Mat3 dr2_dphi = cp * k2 + sp * k2sq;

  return {r2 * r1, dr2_dtheta * r1 + r2 * dr1, dr2_dphi * r1};
}

SkeletonSequence augment_view(const SkeletonSequence& aligned, const CameraAngles& view) {
  if (!aligned.aligned) {
    throw Error(ErrorCode::contract, "augment_view requires a globally aligned sequence");
  }
  SkeletonSequence out = rotate_sequence(rotation_from_angles(view).transpose(), aligned);
  out.aligned = false;
  out.source_view = view;
  return out;
}

double angle_difference(const CameraAngles& a, const CameraAngles& b) {
  return std::max(std::abs(wrap_angle(a.theta - b.theta)), std::abs(a.phi - b.phi));
}

double rotation_distance(const CameraAngles& a, const CameraAngles& b) {
  const Mat3 rel = rotation_from_angles(a).transpose() * rotation_from_angles(b);
  // atan2 form stays accurate for tiny angles where acos loses digits.
  const Vec3 w(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * w.norm(), 0.5 * (rel.trace() - 1.0));
}

ViewSphere icosahedron_vertices(int frequency) {
  if (frequency < 1) throw Error(ErrorCode::validation, "icosahedron frequency must be >= 1");

  std::vector<Vec3> base;
  base.emplace_back(0.0, 1.0, 0.0);
  const double ring_y = 1.0 / std::sqrt(5.0);
  const double ring_r = 2.0 / std::sqrt(5.0);
  for (int i = 0; i < 5; ++i) {
    const double az = 2.0 * kPi * i / 5.0;
    base.emplace_back(ring_r * std::cos(az), ring_y, ring_r * std::sin(az));
  }
  for (int i = 0; i < 5; ++i) {
    const double az = 2.0 * kPi * i / 5.0 + kPi / 5.0;
    base.emplace_back(ring_r * std::cos(az), -ring_y, ring_r * std::sin(az));
  }
  base.emplace_back(0.0, -1.0, 0.0);

  std::vector<std::array<int, 3>> faces;
  for (int i = 0; i < 5; ++i) {
    const int u0 = 1 + i, u1 = 1 + (i + 1) % 5;
    const int l0 = 6 + i, l1 = 6 + (i + 1) % 5;
    faces.push_back({0, u0, u1});
    faces.push_back({u0, l0, u1});
    faces.push_back({u1, l0, l1});
    faces.push_back({11, l1, l0});
  }

  ViewSphere sphere;
  sphere.frequency = frequency;
  sphere.vertices = base;
  auto add_unique = [&](const Vec3& p) {
    for (const Vec3& v : sphere.vertices) {
      if ((v - p).norm() < 1e-9) return;
    }
    sphere.vertices.push_back(p);
  };
  const double n = frequency;
  for (const auto& face : faces) {
    const Vec3& a = base[face[0]];
    const Vec3& b = base[face[1]];
    const Vec3& c = base[face[2]];
    for (int i = 0; i <= frequency; ++i) {
      for (int j = 0; j <= frequency - i; ++j) {
        const int k = frequency - i - j;
        const Vec3 p = (i * a + j * b + k * c) / n;
        add_unique(p.normalized());
      }
    }
  }
  return sphere;
}

ViewSplit split_views(const ViewSphere& sphere, std::uint64_t seed) {
  if (sphere.vertices.size() != kTrainViewCount + kTestViewCount) {
    throw Error(ErrorCode::validation,
                "view split needs a 92-vertex sphere, got " +
                    std::to_string(sphere.vertices.size()));
  }
  std::vector<std::size_t> order(sphere.vertices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  ViewSplit split;
  split.train.assign(order.begin(), order.begin() + kTrainViewCount);
  split.test.assign(order.begin() + kTrainViewCount, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<CameraAngles> vertex_angles(const ViewSphere& sphere,
                                        const std::vector<std::size_t>& indices) {
  std::vector<CameraAngles> out;
  out.reserve(indices.size());
  for (const std::size_t i : indices) out.push_back(angles_from_camera(sphere.vertices.at(i)));
  return out;
}

std::string view_sphere_to_json(const ViewSphere& sphere) {
  std::string out = "{\"frequency\":" + std::to_string(sphere.frequency) + ",\"vertices\":[";
  for (std::size_t i = 0; i < sphere.vertices.size(); ++i) {
    if (i) out += ',';
    out += '[';
    for (int c = 0; c < 3; ++c) {
      if (c) out += ',';
      detail::append_double(out, sphere.vertices[i][c]);
    }
    out += ']';
  }
  out += "]}\n";
  return out;
}

}  // namespace fewskel
