#include "skelact/streams.hpp"

#include <cmath>

namespace skelact {

namespace {

void check_joints(const SkeletonSequence& seq, const SkeletonTopology& topo,
                  const char* op) {
    if (seq.joints != topo.num_joints) {
        throw DimensionError(std::string(op) + ": sequence has " +
                             std::to_string(seq.joints) +
                             " joints, topology '" + topo.name + "' has " +
                             std::to_string(topo.num_joints));
    }
}

void check_coords(const SkeletonSequence& seq, const char* op) {
    if (seq.channels != 3) {
        throw DimensionError(std::string(op) +
                             ": expected a 3-channel coordinate stream, got C=" +
                             std::to_string(seq.channels));
    }
}

}  // namespace

SkeletonSequence derive_bone_stream(const SkeletonSequence& seq,
                                    const SkeletonTopology& topo) {
    check_joints(seq, topo, "derive_bone_stream");
    SkeletonSequence out = seq;
    std::fill(out.data.begin(), out.data.end(), 0.0);
    for (const auto& [prox, dist] : topo.edges) {
        for (std::size_t c = 0; c < seq.channels; ++c) {
            for (std::size_t t = 0; t < seq.frames; ++t) {
                for (std::size_t m = 0; m < seq.bodies; ++m) {
                    out.at(c, t, dist, m) =
                        seq.at(c, t, dist, m) - seq.at(c, t, prox, m);
                }
            }
        }
    }
    return out;
}

SkeletonSequence derive_motion_stream(const SkeletonSequence& seq) {
    SkeletonSequence out = seq;
    const std::size_t plane = seq.joints * seq.bodies;
    for (std::size_t c = 0; c < seq.channels; ++c) {
        for (std::size_t t = 0; t < seq.frames; ++t) {
            const std::size_t dst = (c * seq.frames + t) * plane;
            if (t + 1 < seq.frames) {
                const std::size_t cur = dst;
                const std::size_t nxt = (c * seq.frames + t + 1) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    out.data[dst + i] = seq.data[nxt + i] - seq.data[cur + i];
                }
            } else {
                for (std::size_t i = 0; i < plane; ++i) out.data[dst + i] = 0.0;
            }
        }
    }
    return out;
}

SkeletonSequence derive_length_stream(const SkeletonSequence& seq,
                                      const SkeletonTopology& topo,
                                      LengthKind kind) {
    check_joints(seq, topo, "derive_length_stream");
    check_coords(seq, "derive_length_stream");
    const SkeletonSequence* source = &seq;
    SkeletonSequence bones;
    if (kind == LengthKind::bone) {
        bones = derive_bone_stream(seq, topo);
        source = &bones;
    }
    SkeletonSequence out =
        SkeletonSequence::zeros(1, seq.frames, seq.joints, seq.bodies);
    out.label = seq.label;
    out.id = seq.id;
    for (std::size_t t = 0; t < seq.frames; ++t) {
        for (std::size_t n = 0; n < seq.joints; ++n) {
            for (std::size_t m = 0; m < seq.bodies; ++m) {
                double acc = 0.0;
                if (kind == LengthKind::bone) {
                    for (std::size_t c = 0; c < 3; ++c) {
                        const double v = source->at(c, t, n, m);
                        acc += v * v;
                    }
                } else {
                    for (std::size_t c = 0; c < 3; ++c) {
                        const double v = seq.at(c, t, n, m) -
                                         seq.at(c, t, topo.center_joint, m);
                        acc += v * v;
                    }
                }
                out.at(0, t, n, m) = std::sqrt(acc);
            }
        }
    }
    return out;
}

SkeletonSequence center_on_joint(const SkeletonSequence& seq,
                                 const SkeletonTopology& topo) {
    check_joints(seq, topo, "center_on_joint");
    check_coords(seq, "center_on_joint");
    SkeletonSequence out = seq;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t t = 0; t < seq.frames; ++t) {
            for (std::size_t m = 0; m < seq.bodies; ++m) {
                const double center = seq.at(c, t, topo.center_joint, m);
                for (std::size_t n = 0; n < seq.joints; ++n) {
                    out.at(c, t, n, m) = seq.at(c, t, n, m) - center;
                }
            }
        }
    }
    return out;
}

SkeletonSequence derive_stream(const SkeletonSequence& seq,
                               const SkeletonTopology& topo, StreamKind kind,
                               bool center_coords) {
    const SkeletonSequence* base = &seq;
    SkeletonSequence centered;
    if (center_coords) {
        centered = center_on_joint(seq, topo);
        base = &centered;
    }
    switch (kind) {
        case StreamKind::joint: return *base;
        case StreamKind::bone: return derive_bone_stream(*base, topo);
        case StreamKind::joint_motion: return derive_motion_stream(*base);
        case StreamKind::bone_motion:
            return derive_motion_stream(derive_bone_stream(*base, topo));
        case StreamKind::joint_length:
            return derive_length_stream(*base, topo, LengthKind::joint);
        case StreamKind::bone_length:
            return derive_length_stream(*base, topo, LengthKind::bone);
    }
    throw ArgumentError("derive_stream: bad stream kind");
}

SkeletonSequence pad_repeat(const SkeletonSequence& seq, long t_target) {
    if (t_target <= 0) {
        throw ArgumentError("pad_repeat: target length must be positive, got " +
                            std::to_string(t_target));
    }
    const std::size_t target = static_cast<std::size_t>(t_target);
    if (seq.frames >= target) return seq;
    SkeletonSequence out = SkeletonSequence::zeros(seq.channels, target,
                                                   seq.joints, seq.bodies);
    out.label = seq.label;
    out.id = seq.id;
    const std::size_t plane = seq.joints * seq.bodies;
    for (std::size_t c = 0; c < seq.channels; ++c) {
        for (std::size_t t = 0; t < target; ++t) {
            const std::size_t src = (c * seq.frames + (t % seq.frames)) * plane;
            const std::size_t dst = (c * target + t) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                out.data[dst + i] = seq.data[src + i];
            }
        }
    }
    return out;
}

namespace {

SkeletonSequence crop_frames(const SkeletonSequence& seq, std::size_t start,
                             std::size_t crop_len) {
    if (start == 0 && crop_len == seq.frames) return seq;
    SkeletonSequence out = SkeletonSequence::zeros(seq.channels, crop_len,
                                                   seq.joints, seq.bodies);
    out.label = seq.label;
    out.id = seq.id;
    const std::size_t plane = seq.joints * seq.bodies;
    for (std::size_t c = 0; c < seq.channels; ++c) {
        for (std::size_t t = 0; t < crop_len; ++t) {
            const std::size_t src = (c * seq.frames + start + t) * plane;
            const std::size_t dst = (c * crop_len + t) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                out.data[dst + i] = seq.data[src + i];
            }
        }
    }
    return out;
}

}  // namespace

SkeletonSequence augment(const SkeletonSequence& seq, std::mt19937_64& rng,
                         const AugmentParams& params) {
    if (params.crop_len == 0 || params.crop_len > seq.frames) {
        throw ArgumentError("augment: crop length " +
                            std::to_string(params.crop_len) +
                            " outside [1, " + std::to_string(seq.frames) + "]");
    }
    // All seven draws happen unconditionally (see header).
    std::uniform_int_distribution<std::size_t> start_dist(
        0, seq.frames - params.crop_len);
    const std::size_t start = start_dist(rng);
    const double max_rad = params.max_rot_deg * 3.14159265358979323846 / 180.0;
    std::uniform_real_distribution<double> angle_dist(-max_rad, max_rad);
    const double ax = angle_dist(rng);
    const double ay = angle_dist(rng);
    const double az = angle_dist(rng);
    std::uniform_real_distribution<double> trans_dist(-params.max_trans,
                                                      params.max_trans);
    const double tx = trans_dist(rng);
    const double ty = trans_dist(rng);
    const double tz = trans_dist(rng);

    SkeletonSequence out = crop_frames(seq, start, params.crop_len);
    if (seq.channels != 3) return out;  // scalar streams: crop only

    const bool rotate = (ax != 0.0 || ay != 0.0 || az != 0.0);
    const bool translate = (tx != 0.0 || ty != 0.0 || tz != 0.0);
    if (rotate) {
        // R = Rz(az) * Ry(ay) * Rx(ax), applied as v' = R v.
        const double cx = std::cos(ax), sx = std::sin(ax);
        const double cy = std::cos(ay), sy = std::sin(ay);
        const double cz = std::cos(az), sz = std::sin(az);
        const double r00 = cz * cy;
        const double r01 = cz * sy * sx - sz * cx;
        const double r02 = cz * sy * cx + sz * sx;
        const double r10 = sz * cy;
        const double r11 = sz * sy * sx + cz * cx;
        const double r12 = sz * sy * cx - cz * sx;
        const double r20 = -sy;
        const double r21 = cy * sx;
        const double r22 = cy * cx;
        for (std::size_t t = 0; t < out.frames; ++t) {
            for (std::size_t n = 0; n < out.joints; ++n) {
                for (std::size_t m = 0; m < out.bodies; ++m) {
                    const double x = out.at(0, t, n, m);
                    const double y = out.at(1, t, n, m);
                    const double z = out.at(2, t, n, m);
                    out.at(0, t, n, m) = r00 * x + r01 * y + r02 * z;
                    out.at(1, t, n, m) = r10 * x + r11 * y + r12 * z;
                    out.at(2, t, n, m) = r20 * x + r21 * y + r22 * z;
                }
            }
        }
    }
    if (translate) {
        const double shift[3] = {tx, ty, tz};
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t t = 0; t < out.frames; ++t) {
                for (std::size_t n = 0; n < out.joints; ++n) {
                    for (std::size_t m = 0; m < out.bodies; ++m) {
                        out.at(c, t, n, m) += shift[c];
                    }
                }
            }
        }
    }
    return out;
}

SkeletonSequence center_crop(const SkeletonSequence& seq,
                             std::size_t crop_len) {
    if (crop_len == 0 || crop_len > seq.frames) {
        throw ArgumentError("center_crop: crop length " +
                            std::to_string(crop_len) + " outside [1, " +
                            std::to_string(seq.frames) + "]");
    }
    return crop_frames(seq, (seq.frames - crop_len) / 2, crop_len);
}

}  // namespace skelact
