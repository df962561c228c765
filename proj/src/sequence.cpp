#include "skelact/sequence.hpp"

#include <cmath>

namespace skelact {

SkeletonSequence SkeletonSequence::zeros(std::size_t c, std::size_t t,
                                         std::size_t n, std::size_t m) {
    SkeletonSequence seq;
    seq.channels = c;
    seq.frames = t;
    seq.joints = n;
    seq.bodies = m;
    seq.data.assign(c * t * n * m, 0.0);
    return seq;
}

void SkeletonSequence::validate() const {
    if (channels == 0 || frames == 0 || joints == 0 || bodies == 0) {
        throw DimensionError("sequence '" + id + "': zero extent (C=" +
                             std::to_string(channels) + ", T=" +
                             std::to_string(frames) + ", N=" +
                             std::to_string(joints) + ", M=" +
                             std::to_string(bodies) + ")");
    }
    if (data.size() != size()) {
        throw DimensionError("sequence '" + id + "': data length " +
                             std::to_string(data.size()) +
                             " does not match extents");
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw FormatError("sequence '" + id + "': non-finite coordinate");
        }
    }
}

void quantize_to_f32(SkeletonSequence& seq) {
    for (double& v : seq.data) v = static_cast<double>(static_cast<float>(v));
}

StreamKind stream_kind_from_string(const std::string& name) {
    if (name == "joint") return StreamKind::joint;
    if (name == "bone") return StreamKind::bone;
    if (name == "joint-motion") return StreamKind::joint_motion;
    if (name == "bone-motion") return StreamKind::bone_motion;
    if (name == "joint-length") return StreamKind::joint_length;
    if (name == "bone-length") return StreamKind::bone_length;
    throw ConfigError("unknown stream '" + name +
                      "' (expected joint, bone, joint-motion, bone-motion, "
                      "joint-length, or bone-length)");
}

std::string to_string(StreamKind kind) {
    switch (kind) {
        case StreamKind::joint: return "joint";
        case StreamKind::bone: return "bone";
        case StreamKind::joint_motion: return "joint-motion";
        case StreamKind::bone_motion: return "bone-motion";
        case StreamKind::joint_length: return "joint-length";
        case StreamKind::bone_length: return "bone-length";
    }
    throw ArgumentError("to_string: bad stream kind");
}

std::size_t stream_channels(StreamKind kind) {
    switch (kind) {
        case StreamKind::joint_length:
        case StreamKind::bone_length: return 1;
        default: return 3;
    }
}

const std::vector<StreamKind>& all_stream_kinds() {
    static const std::vector<StreamKind> kinds = {
        StreamKind::joint,        StreamKind::bone,
        StreamKind::joint_motion, StreamKind::bone_motion,
        StreamKind::joint_length, StreamKind::bone_length,
    };
    return kinds;
}

const std::vector<StreamKind>& default_ensemble_streams() {
    static const std::vector<StreamKind> kinds = {
        StreamKind::joint,
        StreamKind::bone,
        StreamKind::joint_motion,
        StreamKind::bone_motion,
    };
    return kinds;
}

void Dataset::validate() const {
    validate_topology(topology);
    for (const SkeletonSequence& s : samples) {
        s.validate();
        if (s.joints != topology.num_joints) {
            throw DimensionError("sample '" + s.id + "': " +
                                 std::to_string(s.joints) +
                                 " joints but topology '" + topology.name +
                                 "' has " +
                                 std::to_string(topology.num_joints));
        }
        if (s.channels != samples.front().channels) {
            throw DimensionError("sample '" + s.id +
                                 "': channel count differs across samples");
        }
        if (s.label >= 0 &&
            static_cast<std::size_t>(s.label) >= class_names.size()) {
            throw ConfigError("sample '" + s.id + "': label " +
                              std::to_string(s.label) + " outside the " +
                              std::to_string(class_names.size()) +
                              " class names");
        }
    }
}

}  // namespace skelact
