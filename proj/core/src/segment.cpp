#include <algorithm>
#include <string>

#include "fewskel/error.hpp"
#include "fewskel/matching.hpp"

namespace fewskel {

SegmentSampledSequence segment_sample(const SkeletonSequence& seq, int t_n, Rng& rng) {
  if (t_n < 1) throw Error(ErrorCode::validation, "t_n must be >= 1");
  if (seq.frames.empty()) throw Error(ErrorCode::validation, "cannot sample an empty sequence");

  const std::size_t segments = static_cast<std::size_t>(t_n);
  const std::size_t count = std::max(seq.frames.size(), segments);
  const std::size_t base = count / segments;
  const std::size_t extra = count % segments;

  SegmentSampledSequence out;
  out.t_n = t_n;
  out.label = seq.label;
  out.frames.reserve(segments);
  out.source_indices.reserve(segments);
  std::size_t start = 0;
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    const std::size_t pick = start + static_cast<std::size_t>(uniform_index(rng, len));
    // Indices past the end refer to the repeated last frame.
    const std::size_t src = std::min(pick, seq.frames.size() - 1);
    out.source_indices.push_back(src);
    out.frames.push_back(seq.frames[src]);
    start += len;
  }
  return out;
}

SegmentSampledSequence whole_sequence(const SkeletonSequence& seq) {
  if (seq.frames.empty()) throw Error(ErrorCode::validation, "cannot sample an empty sequence");
  SegmentSampledSequence out;
  out.t_n = static_cast<int>(seq.frames.size());
  out.label = seq.label;
  out.frames = seq.frames;
  out.source_indices.resize(seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) out.source_indices[i] = i;
  return out;
}

SkeletonEmbedding encode(const SegmentSampledSequence& seq, int order, BoundaryFill fill) {
  if (order < 0 || order > 2) throw Error(ErrorCode::validation, "encoding order must be 0, 1 or 2");
  const auto n = static_cast<Eigen::Index>(seq.frames.size());
  SkeletonEmbedding out;
  out.order = order;
  out.frames.resize(n, static_cast<Eigen::Index>(order + 1) * kFrameBlock);

  auto position = [&](Eigen::Index f) {
    Eigen::Matrix<double, kFrameBlock, 1> v;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      v.segment<3>(static_cast<Eigen::Index>(3 * j)) = seq.frames[static_cast<std::size_t>(f)].joints[j];
    }
    return v;
  };
  const double boundary = fill == BoundaryFill::ones ? 1.0 : 0.0;

  for (Eigen::Index f = 0; f < n; ++f) {
    const auto cur = position(f);
    out.frames.row(f).segment(0, kFrameBlock) = cur.transpose();
    if (order >= 1) {
      auto block = out.frames.row(f).segment(kFrameBlock, kFrameBlock);
      if (f == 0) {
        block.setConstant(boundary);
      } else {
        block = (cur - position(f - 1)).transpose();
      }
    }
    if (order >= 2) {
      auto block = out.frames.row(f).segment(2 * kFrameBlock, kFrameBlock);
      if (f < 2) {
        block.setConstant(boundary);
      } else {
        block = (cur - 2.0 * position(f - 1) + position(f - 2)).transpose();
      }
    }
  }
  return out;
}

}  // namespace fewskel
