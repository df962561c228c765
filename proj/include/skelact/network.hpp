#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "skelact/block.hpp"

namespace skelact {

struct ModelConfig {
    std::string topology = "ntu25";
    PartitionStrategy strategy = PartitionStrategy::spatial;
    std::size_t subsets = 3;  // K_v
    std::size_t in_channels = 3;
    std::vector<BlockSpec> blocks;
    StcConfig stc;
    std::size_t temporal_kernel = 9;
    std::size_t window = 150;  // frames T the model consumes
    std::size_t bodies = 2;    // M
    std::size_t num_classes = 60;
    // Alternative learned-graph initialization: start every free graph at
    // its block's fixed partition matrix instead of zero. Training keeps
    // those parameters frozen for the first few epochs when this is set.
    bool graph_warm_start = false;
};

// The stock backbone: nine blocks, channels 64x3 / 128x3 / 256x3 with a
// temporal stride of 2 at each width change.
ModelConfig default_model_config();

struct Network {
    ModelConfig config;
    SkeletonTopology topology;
    AdjacencySet adj;
    BatchNormState input_bn;  // over the C*N features of each frame
    std::vector<Block> blocks;
    Tensor fc_weight;  // [num_classes, C_last]
    Tensor fc_bias;    // [num_classes]
};

// Builds and initializes the whole model; the seed fixes every random draw
// (construction order is deterministic). The second form takes the skeleton
// tree directly instead of looking up cfg.topology by name; the initial
// weights depend only on the shapes, so relabeling the tree relabels the
// model without disturbing any draw.
Network make_network(const ModelConfig& cfg, std::uint64_t seed);
Network make_network(const ModelConfig& cfg, const SkeletonTopology& topo,
                     std::uint64_t seed);

// x [C, T, N, M] -> logits [num_classes]. Input BN folds bodies into the
// batch; bodies then pass through the blocks independently, are pooled over
// frames and joints, and averaged before the classifier.
Tensor network_forward(Network& net, const Tensor& x, bool training);

// The input-normalization stage of the forward pass on its own: validates
// the [C, T, N, M] shape and batch-normalizes the per-frame joint features.
// Exposed so diagnostic replays start from the exact same tensor the blocks
// see.
Tensor network_input_norm(Network& net, const Tensor& x, bool training);

// Logits -> probabilities (softmax over the class axis).
Tensor class_probabilities(const Tensor& logits);

// Every learnable tensor with its dotted path, in a fixed order (the
// checkpoint manifest order). Buffers are the BN running stats.
std::vector<NamedParam> named_parameters(Network& net);
std::vector<NamedBuffer> named_buffers(Network& net);

struct ParamCountRow {
    std::string module;  // top-level group: input_bn, block0, ..., fc
    std::size_t count = 0;
};

struct ParamCount {
    std::vector<ParamCountRow> rows;
    std::size_t total = 0;
};

ParamCount count_parameters(Network& net);

}  // namespace skelact
