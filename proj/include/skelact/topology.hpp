#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "skelact/errors.hpp"

namespace skelact {

// A skeleton is a tree: N joints, N-1 edges, each edge stored as
// (proximal, distal) where proximal is the endpoint nearer the center joint.
// Every joint except the center appears exactly once as a distal endpoint.
struct SkeletonTopology {
    std::string name;
    std::size_t num_joints = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::size_t center_joint = 0;
};

// Builds one of the named topologies: "ntu25", "kinetics18", or "chain<N>"
// (e.g. "chain11": joints 0-1-...-N-1, center 0). The 25- and 18-joint trees
// are the standard published ones; docs/topologies.md lists them verbatim.
SkeletonTopology build_topology(const std::string& name);

// Validates and returns a caller-supplied tree (used by tests and tools).
SkeletonTopology build_custom_topology(
    std::string name, std::size_t num_joints,
    std::vector<std::pair<std::size_t, std::size_t>> edges,
    std::size_t center_joint);

// Throws ConfigError unless the fields form a valid rooted tree.
void validate_topology(const SkeletonTopology& topo);

// Undirected hop distance from `root` to every joint (BFS over the edges).
std::vector<std::size_t> hop_distances_from(const SkeletonTopology& topo,
                                            std::size_t root);

}  // namespace skelact
