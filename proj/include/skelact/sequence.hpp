#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "skelact/errors.hpp"
#include "skelact/topology.hpp"

namespace skelact {

// One skeleton capture: values indexed [channel][frame][joint][body],
// row-major. Coordinate streams have C=3 (x,y,z), scalar streams C=1.
// By convention every value that crosses the dataset boundary sits on the
// 32-bit float grid (storage precision); in-memory derivations run in double.
struct SkeletonSequence {
    std::size_t channels = 0;  // C
    std::size_t frames = 0;    // T
    std::size_t joints = 0;    // N
    std::size_t bodies = 0;    // M
    std::vector<double> data;
    int label = -1;  // -1 = unlabeled
    std::string id;

    static SkeletonSequence zeros(std::size_t c, std::size_t t, std::size_t n,
                                  std::size_t m);

    std::size_t size() const { return channels * frames * joints * bodies; }
    std::size_t index(std::size_t c, std::size_t t, std::size_t n,
                      std::size_t m) const {
        return ((c * frames + t) * joints + n) * bodies + m;
    }
    double& at(std::size_t c, std::size_t t, std::size_t n, std::size_t m) {
        return data[index(c, t, n, m)];
    }
    double at(std::size_t c, std::size_t t, std::size_t n,
              std::size_t m) const {
        return data[index(c, t, n, m)];
    }

    // Throws unless dims are positive, data length matches, and every value
    // is finite.
    void validate() const;
};

// Rounds every value to the nearest 32-bit float (the dataset storage grid).
void quantize_to_f32(SkeletonSequence& seq);

enum class StreamKind {
    joint,
    bone,
    joint_motion,
    bone_motion,
    joint_length,
    bone_length,
};

StreamKind stream_kind_from_string(const std::string& name);
std::string to_string(StreamKind kind);
// 3 for coordinate streams, 1 for the length streams.
std::size_t stream_channels(StreamKind kind);
const std::vector<StreamKind>& all_stream_kinds();
// The default fusion set: joint, bone, joint_motion, bone_motion.
const std::vector<StreamKind>& default_ensemble_streams();

struct Dataset {
    SkeletonTopology topology;
    std::vector<std::string> class_names;
    std::vector<SkeletonSequence> samples;

    // Labeled samples must fit the class list; all samples share N and C.
    void validate() const;
};

}  // namespace skelact
