#pragma once

#include <optional>
#include <vector>

#include "fewskel/clip.hpp"

namespace fewskel {

using Frames2D = std::vector<std::optional<Frame2D>>;

/// Linearly fills `joint` (every joint when std::nullopt) at the frames
/// strictly between keyframes a < b. Both keyframes must have the joint
/// labeled; nothing is extrapolated.
void interpolate_joints(Frames2D& frames, std::optional<std::size_t> joint, std::size_t frame_a,
                        std::size_t frame_b);

/// Normalized Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Temporal Gaussian smoothing of one trajectory with symmetric reflection at
/// the ends (x[-1] = x[0]). sigma = 0 returns the input.
std::vector<double> gaussian_smooth(const std::vector<double>& signal, double sigma);

/// Smooths every joint trajectory. Throws missing_frames, listing the frames,
/// if any frame is unannotated or incomplete.
void smooth_joints(Frames2D& frames, double sigma);

}  // namespace fewskel
