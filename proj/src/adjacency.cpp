#include "skelact/adjacency.hpp"

#include <cmath>

namespace skelact {

PartitionStrategy partition_strategy_from_string(const std::string& name) {
    if (name == "uniform") return PartitionStrategy::uniform;
    if (name == "distance") return PartitionStrategy::distance;
    if (name == "spatial") return PartitionStrategy::spatial;
    throw ConfigError("unknown partition strategy '" + name +
                      "' (expected uniform, distance, or spatial)");
}

std::string to_string(PartitionStrategy strategy) {
    switch (strategy) {
        case PartitionStrategy::uniform: return "uniform";
        case PartitionStrategy::distance: return "distance";
        case PartitionStrategy::spatial: return "spatial";
    }
    throw ArgumentError("to_string: bad partition strategy");
}

namespace {

// All-pairs hop distances via one BFS per vertex.
std::vector<std::vector<std::size_t>> all_hop_distances(
    const SkeletonTopology& topo) {
    std::vector<std::vector<std::size_t>> hops(topo.num_joints);
    for (std::size_t v = 0; v < topo.num_joints; ++v) {
        hops[v] = hop_distances_from(topo, v);
    }
    return hops;
}

}  // namespace

std::vector<std::vector<double>> raw_partitions(const SkeletonTopology& topo,
                                                PartitionStrategy strategy,
                                                std::size_t k_v) {
    validate_topology(topo);
    const std::size_t n = topo.num_joints;
    auto check_k = [&](std::size_t expected) {
        if (k_v != expected) {
            throw ConfigError("partition strategy " + to_string(strategy) +
                              " needs K_v=" + std::to_string(expected) +
                              ", got " + std::to_string(k_v));
        }
    };
    std::vector<std::vector<double>> parts;
    switch (strategy) {
        case PartitionStrategy::uniform: {
            check_k(1);
            std::vector<double> a(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
            for (const auto& [p, d] : topo.edges) {
                a[p * n + d] = 1.0;
                a[d * n + p] = 1.0;
            }
            parts.push_back(std::move(a));
            break;
        }
        case PartitionStrategy::distance: {
            if (k_v < 2) {
                throw ConfigError(
                    "distance partitioning needs K_v >= 2, got " +
                    std::to_string(k_v));
            }
            const auto hops = all_hop_distances(topo);
            for (std::size_t k = 0; k < k_v; ++k) {
                std::vector<double> a(n * n, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        if (hops[i][j] == k) a[i * n + j] = 1.0;
                    }
                }
                parts.push_back(std::move(a));
            }
            break;
        }
        case PartitionStrategy::spatial: {
            check_k(3);
            const auto to_center =
                hop_distances_from(topo, topo.center_joint);
            std::vector<double> self(n * n, 0.0);
            std::vector<double> centripetal(n * n, 0.0);
            std::vector<double> centrifugal(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) self[i * n + i] = 1.0;
            // Entry (i, j) feeds output vertex j, so the subset is chosen by
            // whether the source i sits closer to the center than j.
            for (const auto& [p, d] : topo.edges) {
                for (const auto [i, j] :
                     {std::pair{p, d}, std::pair{d, p}}) {
                    if (to_center[i] < to_center[j]) {
                        centripetal[i * n + j] = 1.0;
                    } else {
                        centrifugal[i * n + j] = 1.0;
                    }
                }
            }
            parts.push_back(std::move(self));
            parts.push_back(std::move(centripetal));
            parts.push_back(std::move(centrifugal));
            break;
        }
    }
    return parts;
}

AdjacencySet build_adjacency(const SkeletonTopology& topo,
                             PartitionStrategy strategy, std::size_t k_v) {
    AdjacencySet set;
    set.strategy = strategy;
    set.num_joints = topo.num_joints;
    set.matrices = raw_partitions(topo, strategy, k_v);
    const std::size_t n = topo.num_joints;
    for (auto& a : set.matrices) {
        std::vector<double> row_sum(n, 0.0);
        std::vector<double> col_sum(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                row_sum[i] += a[i * n + j];
                col_sum[j] += a[i * n + j];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double& v = a[i * n + j];
                if (v != 0.0) {
                    v /= std::sqrt(row_sum[i] * col_sum[j]);
                }
            }
        }
    }
    return set;
}

}  // namespace skelact
