#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fewskel/clip.hpp"
#include "fewskel/geometry.hpp"
#include "fewskel/skeleton.hpp"

namespace fewskel {

/// Names of the built-in parametric motion families (squat, wave, jump, ...).
const std::vector<std::string>& motion_families();

/// Noise-free, globally aligned (facing -z at frame 1), standardized
/// sequence of the named family. Every family starts and ends at rest.
SkeletonSequence synthesize_motion(const std::string& family);

struct SyntheticConfig {
  std::vector<std::string> classes;  // empty: every family
  int samples_per_class = 20;
  double noise = 0.0;                // joint noise std-dev, standardized units
  std::uint64_t seed = 0;
  std::vector<CameraAngles> views;   // empty: all vertices of a 3-frequency sphere
};

struct SyntheticSample {
  SkeletonSequence aligned;   // noisy, globally aligned
  SkeletonSequence observed;  // aligned rendered from `view`
  CameraAngles view;
  int index = 0;
  ClipRecord clip;            // observed, canonical clip record
};

/// Deterministic per (seed, class, index); sample `i` of class `c` gets its
/// own RNG stream, a uniformly drawn view and i.i.d. Gaussian joint noise.
std::vector<SyntheticSample> generate_synthetic(const SyntheticConfig& config);

}  // namespace fewskel
