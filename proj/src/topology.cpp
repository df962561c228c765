#include "skelact/topology.hpp"

#include <deque>

namespace skelact {

namespace {

using Edge = std::pair<std::size_t, std::size_t>;

// 25-joint tree (Kinect v2 numbering, 0-based), rooted at the spine-middle
// joint (index 1). Each pair is (proximal, distal); see docs/topologies.md.
const std::vector<Edge>& ntu25_edges() {
    static const std::vector<Edge> edges = {
        {1, 0},   {1, 20},  {20, 2},  {2, 3},   {20, 4},  {4, 5},
        {5, 6},   {6, 7},   {20, 8},  {8, 9},   {9, 10},  {10, 11},
        {0, 12},  {12, 13}, {13, 14}, {14, 15}, {0, 16},  {16, 17},
        {17, 18}, {18, 19}, {22, 21}, {7, 22},  {24, 23}, {11, 24},
    };
    return edges;
}

// 18-joint tree (OpenPose numbering, 0-based), rooted at the neck (index 1).
const std::vector<Edge>& kinetics18_edges() {
    static const std::vector<Edge> edges = {
        {1, 0},  {1, 2},   {1, 5},   {2, 3},   {3, 4},   {5, 6},
        {6, 7},  {2, 8},   {8, 9},   {9, 10},  {5, 11},  {11, 12},
        {12, 13}, {0, 14}, {0, 15},  {14, 16}, {15, 17},
    };
    return edges;
}

}  // namespace

void validate_topology(const SkeletonTopology& topo) {
    const std::size_t n = topo.num_joints;
    if (n == 0) throw ConfigError("topology '" + topo.name + "': no joints");
    if (topo.center_joint >= n) {
        throw ConfigError("topology '" + topo.name + "': center joint " +
                          std::to_string(topo.center_joint) + " out of range");
    }
    if (topo.edges.size() != n - 1) {
        throw ConfigError("topology '" + topo.name + "': " +
                          std::to_string(topo.edges.size()) + " edges for " +
                          std::to_string(n) + " joints (tree needs " +
                          std::to_string(n - 1) + ")");
    }
    std::vector<int> distal_count(n, 0);
    for (const auto& [prox, dist] : topo.edges) {
        if (prox >= n || dist >= n) {
            throw ConfigError("topology '" + topo.name +
                              "': edge endpoint out of range");
        }
        distal_count[dist] += 1;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const int expected = (j == topo.center_joint) ? 0 : 1;
        if (distal_count[j] != expected) {
            throw ConfigError("topology '" + topo.name + "': joint " +
                              std::to_string(j) + " appears " +
                              std::to_string(distal_count[j]) +
                              " times as a distal endpoint (cycle or "
                              "disconnected graph)");
        }
    }
    // Connectivity: BFS from the center over undirected edges must reach all.
    std::vector<std::size_t> dist = hop_distances_from(topo, topo.center_joint);
    for (std::size_t j = 0; j < n; ++j) {
        if (dist[j] == static_cast<std::size_t>(-1)) {
            throw ConfigError("topology '" + topo.name + "': joint " +
                              std::to_string(j) +
                              " unreachable from the center (cycle or "
                              "disconnected graph)");
        }
    }
}

std::vector<std::size_t> hop_distances_from(const SkeletonTopology& topo,
                                            std::size_t root) {
    const std::size_t n = topo.num_joints;
    if (root >= n) {
        throw ArgumentError("hop_distances_from: root " + std::to_string(root) +
                            " out of range");
    }
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [a, b] : topo.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::size_t> dist(n, static_cast<std::size_t>(-1));
    std::deque<std::size_t> queue;
    dist[root] = 0;
    queue.push_back(root);
    while (!queue.empty()) {
        std::size_t cur = queue.front();
        queue.pop_front();
        for (std::size_t nxt : adj[cur]) {
            if (dist[nxt] == static_cast<std::size_t>(-1)) {
                dist[nxt] = dist[cur] + 1;
                queue.push_back(nxt);
            }
        }
    }
    return dist;
}

SkeletonTopology build_custom_topology(std::string name,
                                       std::size_t num_joints,
                                       std::vector<Edge> edges,
                                       std::size_t center_joint) {
    SkeletonTopology topo;
    topo.name = std::move(name);
    topo.num_joints = num_joints;
    topo.edges = std::move(edges);
    topo.center_joint = center_joint;
    validate_topology(topo);
    return topo;
}

SkeletonTopology build_topology(const std::string& name) {
    if (name == "ntu25") {
        return build_custom_topology("ntu25", 25, ntu25_edges(), 1);
    }
    if (name == "kinetics18") {
        return build_custom_topology("kinetics18", 18, kinetics18_edges(), 1);
    }
    if (name.rfind("chain", 0) == 0) {
        const std::string count = name.substr(5);
        std::size_t n = 0;
        try {
            std::size_t pos = 0;
            n = std::stoul(count, &pos);
            if (pos != count.size()) n = 0;
        } catch (...) {
            n = 0;
        }
        if (n < 2) {
            throw ConfigError("build_topology: bad chain size in '" + name +
                              "'");
        }
        std::vector<Edge> edges;
        for (std::size_t j = 0; j + 1 < n; ++j) edges.push_back({j, j + 1});
        return build_custom_topology(name, n, std::move(edges), 0);
    }
    throw ConfigError("build_topology: unknown topology '" + name +
                      "' (expected ntu25, kinetics18, or chain<N>)");
}

}  // namespace skelact
