#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "skelact/topology.hpp"

namespace skelact {

// How neighbors are split into the K_v graph-convolution subsets:
//   uniform  (K_v=1): self plus all neighbors in one subset
//   distance (K_v>=2): subset k holds the pairs exactly k hops apart
//   spatial  (K_v=3): self / centripetal / centrifugal relative to the
//                     center joint's hop distance
enum class PartitionStrategy { uniform, distance, spatial };

PartitionStrategy partition_strategy_from_string(const std::string& name);
std::string to_string(PartitionStrategy strategy);

// The fixed graphs: K_v row-major NxN matrices, each degree-normalized
// independently. Graphs multiply features from the right (out[j] depends on
// column j), so entry (i, j) routes vertex i into vertex j.
struct AdjacencySet {
    PartitionStrategy strategy = PartitionStrategy::uniform;
    std::size_t num_joints = 0;
    std::vector<std::vector<double>> matrices;

    std::size_t subsets() const { return matrices.size(); }
};

// The unnormalized 0/1 partitions. For the standard pairs (uniform 1,
// distance 2, spatial 3) they sum to adjacency-plus-self-loops; a distance
// split of K_v > 2 widens the sum to the (K_v-1)-hop neighborhood.
std::vector<std::vector<double>> raw_partitions(const SkeletonTopology& topo,
                                                PartitionStrategy strategy,
                                                std::size_t k_v);

// Normalizes each raw partition as D_out^{-1/2} A D_in^{-1/2} (row/column
// sums; identical to the symmetric Lambda^{-1/2} A Lambda^{-1/2} whenever the
// partition is symmetric). Vertices with zero degree keep zero rows.
// Unsupported (strategy, K_v) pairs throw ConfigError.
AdjacencySet build_adjacency(const SkeletonTopology& topo,
                             PartitionStrategy strategy, std::size_t k_v);

}  // namespace skelact
