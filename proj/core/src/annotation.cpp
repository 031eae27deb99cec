#include "fewskel/annotation.hpp"

#include <cmath>
#include <string>

#include "fewskel/error.hpp"

namespace fewskel {

void interpolate_joints(Frames2D& frames, std::optional<std::size_t> joint, std::size_t frame_a,
                        std::size_t frame_b) {
  if (frame_a >= frames.size() || frame_b >= frames.size()) {
    throw Error(ErrorCode::not_found, "keyframe index out of range");
  }
  if (frame_a >= frame_b) throw Error(ErrorCode::validation, "frame_a must be before frame_b");
  if (joint && *joint >= kJointCount) throw Error(ErrorCode::not_found, "joint index out of range");

  const std::size_t first = joint.value_or(0);
  const std::size_t last = joint ? *joint + 1 : kJointCount;
  for (std::size_t j = first; j < last; ++j) {
    const auto& fa = frames[frame_a];
    const auto& fb = frames[frame_b];
    if (!fa || !fb || !(*fa)[j] || !(*fb)[j]) {
      throw Error(ErrorCode::validation,
                  "joint " + std::to_string(j) + " must be labeled on both keyframes");
    }
  }
  for (std::size_t j = first; j < last; ++j) {
    const Point2 pa = *(*frames[frame_a])[j];
    const Point2 pb = *(*frames[frame_b])[j];
    for (std::size_t f = frame_a + 1; f < frame_b; ++f) {
      if (!frames[f]) frames[f] = Frame2D{};
      const double t = static_cast<double>(f - frame_a) / static_cast<double>(frame_b - frame_a);
      (*frames[f])[j] = Point2{pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])};
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::validation, "sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return {1.0};
  const auto radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

std::vector<double> gaussian_smooth(const std::vector<double>& signal, double sigma) {
  const std::vector<double> kernel = gaussian_kernel(sigma);
  if (kernel.size() == 1 || signal.empty()) return signal;
  const auto n = static_cast<long>(signal.size());
  const long radius = static_cast<long>(kernel.size() / 2);
  auto reflect = [n](long i) {
    const long period = 2 * n;
    long m = ((i % period) + period) % period;
    return m < n ? m : period - 1 - m;
  };
  std::vector<double> out(signal.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -radius; k <= radius; ++k) {
      acc += kernel[static_cast<std::size_t>(k + radius)] * signal[static_cast<std::size_t>(reflect(i + k))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

void smooth_joints(Frames2D& frames, double sigma) {
  std::string missing;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    bool complete = frames[f].has_value();
    if (complete) {
      for (const auto& j : *frames[f]) complete = complete && j.has_value();
    }
    if (!complete) {
      if (!missing.empty()) missing += ',';
      missing += std::to_string(f);
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::missing_frames, "cannot smooth; unannotated frames: " + missing);
  }
  for (std::size_t j = 0; j < kJointCount; ++j) {
    for (int c = 0; c < 2; ++c) {
      std::vector<double> traj(frames.size());
      for (std::size_t f = 0; f < frames.size(); ++f) traj[f] = (*(*frames[f])[j])[c];
      const std::vector<double> smoothed = gaussian_smooth(traj, sigma);
      for (std::size_t f = 0; f < frames.size(); ++f) (*(*frames[f])[j])[c] = smoothed[f];
    }
  }
}

}  // namespace fewskel
