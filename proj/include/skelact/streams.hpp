#pragma once

#include <cstddef>
#include <random>

#include "skelact/sequence.hpp"
#include "skelact/topology.hpp"

namespace skelact {

// Bone vectors: for each edge (proximal i, distal j), slot j holds v_j - v_i
// per channel/frame/body; the center joint's slot stays zero (the empty bone
// that keeps bone tensors joint-shaped). Works per channel for any C.
SkeletonSequence derive_bone_stream(const SkeletonSequence& seq,
                                    const SkeletonTopology& topo);

// Forward temporal difference: frame f holds data[f+1] - data[f]; the final
// frame's motion is zero so the stream keeps shape T.
SkeletonSequence derive_motion_stream(const SkeletonSequence& seq);

enum class LengthKind { joint, bone };

// C=1 stream: kind=bone -> per-slot Euclidean norm of the bone vector;
// kind=joint -> distance of each joint to the center joint. Input must have
// C=3.
SkeletonSequence derive_length_stream(const SkeletonSequence& seq,
                                      const SkeletonTopology& topo,
                                      LengthKind kind);

// Subtracts the center joint's coordinates per frame/body (optional
// preprocessing behind a config flag; C=3 input only).
SkeletonSequence center_on_joint(const SkeletonSequence& seq,
                                 const SkeletonTopology& topo);

// Dispatches a raw C=3 joint capture to any derived stream; center_coords
// applies center_on_joint first.
SkeletonSequence derive_stream(const SkeletonSequence& seq,
                               const SkeletonTopology& topo, StreamKind kind,
                               bool center_coords = false);

// Tiles frames cyclically (f mod T) up to t_target; longer inputs pass
// through unchanged.
SkeletonSequence pad_repeat(const SkeletonSequence& seq, long t_target);

struct AugmentParams {
    double max_rot_deg = 0.0;
    double max_trans = 0.0;
    std::size_t crop_len = 0;
};

// Training-time augmentation, deterministic given the generator state. Draw
// order is pinned: crop start, Euler angles (x,y,z), translation (x,y,z) —
// always all seven draws, so the stream position does not depend on the
// parameter values. Steps: (1) contiguous temporal crop of crop_len frames;
// (2) one rotation R = Rz*Ry*Rx applied to every joint/frame/body; (3) one
// translation. Rotation/translation apply to C=3 streams only (a scalar
// stream has no coordinate frame); with zero parameters the result is
// bitwise identical to the crop, and a full-length crop is the identity.
SkeletonSequence augment(const SkeletonSequence& seq, std::mt19937_64& rng,
                         const AugmentParams& params);

// Deterministic centered temporal window (evaluation path).
SkeletonSequence center_crop(const SkeletonSequence& seq,
                             std::size_t crop_len);

}  // namespace skelact
