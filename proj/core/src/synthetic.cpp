#include "fewskel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Geometry>

#include "fewskel/error.hpp"
#include "fewskel/random.hpp"
#include "fewskel/standardize.hpp"

namespace fewskel {
namespace {

constexpr double kPi = std::numbers::pi;

// Joint indices of the default topology.
enum Joint : int {
  kPelvis, kRHip, kRKnee, kRAnkle, kLHip, kLKnee, kLAnkle, kSpine, kThorax,
  kNeck, kHead, kLShoulder, kLElbow, kLWrist, kRShoulder, kRElbow, kRWrist
};

// Rest bone vectors (child - parent), y up, subject facing -z, right side at +x.
Vec3 rest_bone(int child) {
  switch (child) {
    case kRHip: return {0.13, 0.0, 0.0};
    case kRKnee: return {0.0, -0.44, -0.02};
    case kRAnkle: return {0.0, -0.42, 0.03};
    case kLHip: return {-0.13, 0.0, 0.0};
    case kLKnee: return {0.0, -0.44, -0.02};
    case kLAnkle: return {0.0, -0.42, 0.03};
    case kSpine: return {0.0, 0.23, -0.01};
    case kThorax: return {0.0, 0.25, 0.02};
    case kNeck: return {0.0, 0.11, -0.08};
    case kHead: return {0.0, 0.12, 0.04};
    case kLShoulder: return {-0.17, -0.02, 0.01};
    case kLElbow: return {-0.02, -0.28, 0.0};
    case kLWrist: return {0.0, -0.25, -0.03};
    case kRShoulder: return {0.17, -0.02, 0.01};
    case kRElbow: return {0.02, -0.28, 0.0};
    case kRWrist: return {0.0, -0.25, -0.03};
    default: return Vec3::Zero();
  }
}

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

// Local rotation at the parent end of the bone ending in each joint.
using Pose = std::array<Mat3, kJointCount>;
using PoseFn = std::function<void(double phase, Pose& local)>;

double bump(double p) { return std::sin(kPi * p); }
double bump2(double p) { return bump(p) * bump(p); }

// Rises from 0 to 1 over the first 15% of the clip, holds, and falls back at the end.
double hold(double p) {
  const double t = std::clamp(std::min(p, 1.0 - p) / 0.15, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Family {
  std::string name;
  int frames;
  PoseFn pose;
};

const std::vector<Family>& families() {
  static const std::vector<Family> all = {
      {"squat", 40,
       [](double p, Pose& l) {
         const double s = bump(p);
         l[kRKnee] = l[kLKnee] = rot_x(1.4 * s);
         l[kRAnkle] = l[kLAnkle] = rot_x(-2.1 * s);
         l[kSpine] = rot_x(-0.5 * s);
         l[kLElbow] = l[kRElbow] = rot_x(1.3 * s);
       }},
      {"wave", 46,
       [](double p, Pose& l) {
         const double s = bump2(p);
         l[kRElbow] = rot_z(2.4 * s);
         l[kRWrist] = rot_z(0.6 * s * std::sin(6.0 * kPi * p));
       }},
      {"jump", 36,
       [](double p, Pose& l) {
         const double s = bump(p);
         const double crouch = std::pow(std::sin(2.0 * kPi * p), 2);
         l[kLElbow] = l[kRElbow] = rot_x(2.8 * s);
         l[kRKnee] = l[kLKnee] = rot_x(0.9 * crouch);
         l[kRAnkle] = l[kLAnkle] = rot_x(-1.5 * crouch);
       }},
      {"kick", 42,
       [](double p, Pose& l) {
         const double s = bump(p);
         l[kRKnee] = rot_x(1.5 * s);
         l[kRAnkle] = rot_x(-1.2 * bump2(p) * (1.0 - s) * 4.0);
         l[kLElbow] = rot_x(0.6 * s);
         l[kRElbow] = rot_z(0.5 * s);
       }},
      {"jumping_jack", 44,
       [](double p, Pose& l) {
         const double s = bump(p);
         l[kRElbow] = rot_z(2.6 * s);
         l[kLElbow] = rot_z(-2.6 * s);
         l[kRKnee] = rot_z(0.35 * s);
         l[kLKnee] = rot_z(-0.35 * s);
       }},
      {"punch", 48,
       [](double p, Pose& l) {
         const double s = std::abs(std::sin(2.0 * kPi * p));
         l[kLElbow] = rot_x(1.5 * s);
         l[kLWrist] = rot_x(0.9 * (1.0 - s) * bump(p));
         l[kSpine] = rot_y(0.3 * std::sin(2.0 * kPi * p));
       }},
      {"bow", 50,
       [](double p, Pose& l) {
         const double s = bump(p);
         l[kSpine] = rot_x(-1.1 * s);
         l[kNeck] = rot_x(-0.3 * s);
       }},
      {"twist", 38,
       [](double p, Pose& l) {
         // Arms held out to the sides while the torso turns.
         l[kSpine] = rot_y(0.5 * std::sin(2.0 * kPi * p));
         l[kRElbow] = rot_z(1.6 * hold(p));
         l[kLElbow] = rot_z(-1.6 * hold(p));
       }},
      {"side_bend", 45,
       [](double p, Pose& l) {
         const double s = bump(p);
         // Left arm overhead, right hand on the thigh, bending left then right.
         l[kSpine] = rot_z(0.35 * std::sin(2.0 * kPi * p));
         l[kLElbow] = rot_z(-2.9 * hold(p));
         l[kRElbow] = rot_z(0.3 * hold(p));
         l[kRKnee] = l[kLKnee] = rot_x(0.4 * s);
       }},
      {"lunge", 52,
       [](double p, Pose& l) {
         const double s = bump(p);
         l[kRKnee] = rot_x(1.0 * s);
         l[kRAnkle] = rot_x(-1.2 * s);
         l[kLKnee] = rot_x(-0.6 * s);
         l[kLAnkle] = rot_x(-0.9 * s);
         l[kLElbow] = rot_x(0.8 * s);
         l[kRElbow] = rot_x(-0.5 * s);
       }},
  };
  return all;
}

const Family& find_family(const std::string& name) {
  for (const Family& f : families()) {
    if (f.name == name) return f;
  }
  throw Error(ErrorCode::configuration, "unknown motion family '" + name + "'");
}

SkeletonFrame forward_kinematics(const Pose& local) {
  const Topology& topo = Topology::human36m();
  std::array<Mat3, kJointCount> global;
  for (auto& m : global) m.setIdentity();
  SkeletonFrame frame = SkeletonFrame::zero();
  for (const Bone& b : topo.bones()) {
    // global[j] is the accumulated rotation of the bone ending at joint j.
    const Mat3& parent_rot = b.parent == topo.root_index() ? Mat3(Mat3::Identity()) : global[b.parent];
    global[b.child] = parent_rot * local[b.child];
    frame.joints[b.child] = frame.joints[b.parent] + global[b.child] * rest_bone(b.child);
  }
  return frame;
}

}  // namespace

const std::vector<std::string>& motion_families() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const Family& f : families()) n.push_back(f.name);
    return n;
  }();
  return names;
}

SkeletonSequence synthesize_motion(const std::string& name) {
  const Family& family = find_family(name);
  SkeletonSequence seq;
  seq.label = name;
  seq.aligned = true;
  for (int f = 0; f < family.frames; ++f) {
    const double phase = static_cast<double>(f) / (family.frames - 1);
    Pose local;
    for (auto& m : local) m.setIdentity();
    family.pose(phase, local);
    seq.frames.push_back(forward_kinematics(local));
  }
  return standardize(seq);
}

std::vector<SyntheticSample> generate_synthetic(const SyntheticConfig& config) {
  if (config.samples_per_class < 1) {
    throw Error(ErrorCode::configuration, "samples_per_class must be positive");
  }
  if (!(config.noise >= 0.0)) throw Error(ErrorCode::configuration, "noise must be >= 0");
  const std::vector<std::string>& classes =
      config.classes.empty() ? motion_families() : config.classes;
  std::vector<CameraAngles> views = config.views;
  if (views.empty()) {
    const ViewSphere sphere = icosahedron_vertices(3);
    for (const Vec3& v : sphere.vertices) views.push_back(angles_from_camera(v));
  }

  std::vector<SyntheticSample> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const SkeletonSequence base = synthesize_motion(classes[c]);
    for (int i = 0; i < config.samples_per_class; ++i) {
      Rng rng = derive_rng(config.seed, (static_cast<std::uint64_t>(c) << 32) | static_cast<std::uint64_t>(i));
      SyntheticSample s;
      s.index = i;
      s.view = views[static_cast<std::size_t>(uniform_index(rng, views.size()))];
      s.aligned = base;
      s.aligned.video_id = classes[c] + "_" + std::to_string(i);
      if (config.noise > 0.0) {
        for (auto& frame : s.aligned.frames) {
          for (auto& joint : frame.joints) {
            for (int k = 0; k < 3; ++k) joint[k] += config.noise * standard_normal(rng);
          }
        }
      }
      s.observed = augment_view(s.aligned, s.view);
      s.clip = clip_from_sequence(s.observed, Provenance::synthetic);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace fewskel
