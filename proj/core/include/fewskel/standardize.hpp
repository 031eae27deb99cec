#pragma once

#include "fewskel/skeleton.hpp"

namespace fewskel {

/// Translates every frame so its root joint sits at the origin.
SkeletonSequence center_at_root(const SkeletonSequence& seq,
                                const Topology& topology = Topology::human36m());

/// Rebuilds every frame from the root outward using frame-1 bone lengths and
/// the frame's own bone directions. A zero-length bone after frame 1 takes
/// the direction it had in the previous (rebuilt) frame.
/// Throws degenerate_reference if a frame-1 bone has zero length.
SkeletonSequence unify_bone_lengths(const SkeletonSequence& seq,
                                    const Topology& topology = Topology::human36m());

/// Applies one global scale so the frame-1 bone-length vector has unit
/// Euclidean norm. Throws scale_undefined for an all-zero skeleton.
SkeletonSequence normalize_scale(const SkeletonSequence& seq,
                                 const Topology& topology = Topology::human36m());

/// center_at_root, then unify_bone_lengths, then normalize_scale.
SkeletonSequence standardize(const SkeletonSequence& seq,
                             const Topology& topology = Topology::human36m());

}  // namespace fewskel
