#include "skelact/network.hpp"

#include "skelact/init.hpp"

namespace skelact {

ModelConfig default_model_config() {
    ModelConfig cfg;
    cfg.blocks = {{64, 1},  {64, 1},  {64, 1},  {128, 2}, {128, 1},
                  {128, 1}, {256, 2}, {256, 1}, {256, 1}};
    return cfg;
}

Network make_network(const ModelConfig& cfg, std::uint64_t seed) {
    return make_network(cfg, build_topology(cfg.topology), seed);
}

Network make_network(const ModelConfig& cfg, const SkeletonTopology& topo,
                     std::uint64_t seed) {
    if (cfg.in_channels == 0 || cfg.window == 0 || cfg.bodies == 0 ||
        cfg.num_classes == 0) {
        throw ConfigError("model config: channels, window, bodies, and "
                          "classes must be positive");
    }
    Network net;
    net.config = cfg;
    net.topology = topo;
    net.adj = build_adjacency(net.topology, cfg.strategy, cfg.subsets);
    net.input_bn =
        BatchNormState::make(cfg.in_channels * net.topology.num_joints);
    std::mt19937_64 rng(seed);
    std::size_t channels = cfg.in_channels;
    std::size_t frames = cfg.window;
    for (const BlockSpec& spec : cfg.blocks) {
        net.blocks.push_back(make_block(channels, spec, net.adj, frames,
                                        cfg.stc, cfg.temporal_kernel, rng));
        channels = spec.out_channels;
        frames = block_frames_out(frames, spec.stride);
    }
    net.fc_weight = glorot_uniform({cfg.num_classes, channels}, channels,
                                   cfg.num_classes, rng);
    net.fc_bias = Tensor::zeros({cfg.num_classes}, true);
    if (cfg.graph_warm_start) {
        // Warm start: every free graph begins as a copy of its fixed
        // partition matrix (the random draws above are unaffected).
        for (Block& block : net.blocks) {
            for (std::size_t k = 0; k < net.adj.subsets(); ++k) {
                block.agcl.learned[k].values() = net.adj.matrices[k];
            }
        }
    }
    return net;
}

Tensor network_input_norm(Network& net, const Tensor& x, bool training) {
    const ModelConfig& cfg = net.config;
    const std::size_t n = net.topology.num_joints;
    const Shape want = {cfg.in_channels, cfg.window, n, cfg.bodies};
    if (x.shape() != want) {
        throw DimensionError("network_forward: expected " +
                             shape_to_string(want) + ", got " +
                             shape_to_string(x.shape()));
    }
    // Per-frame features are the (C*N) joint coordinates; frames and bodies
    // form the batch.
    Tensor h = permute(x, {0, 2, 1, 3});  // [C, N, T, M]
    h = reshape(h, {cfg.in_channels * n, cfg.window * cfg.bodies});
    h = batch_norm(h, 0, net.input_bn, training);
    h = reshape(h, {cfg.in_channels, n, cfg.window, cfg.bodies});
    return permute(h, {0, 2, 1, 3});  // [C, T, N, M]
}

Tensor network_forward(Network& net, const Tensor& x, bool training) {
    const ModelConfig& cfg = net.config;
    const std::size_t n = net.topology.num_joints;
    Tensor h = network_input_norm(net, x, training);

    Tensor pooled_sum;
    for (std::size_t m = 0; m < cfg.bodies; ++m) {
        Tensor body = reshape(narrow(h, 3, m, 1), {cfg.in_channels,
                                                   cfg.window, n});
        for (Block& block : net.blocks) {
            body = block_forward(block, body, training);
        }
        const Tensor pooled = mean_pool(body, {1, 2});  // [C_last]
        pooled_sum = pooled_sum.defined() ? add(pooled_sum, pooled) : pooled;
    }
    const Tensor pooled =
        mul_scalar(pooled_sum, 1.0 / static_cast<double>(cfg.bodies));
    const std::size_t c_last = pooled.extent(0);
    const Tensor logits =
        conv_pointwise(reshape(pooled, {c_last, 1}), net.fc_weight,
                       net.fc_bias);
    return reshape(logits, {cfg.num_classes});
}

Tensor class_probabilities(const Tensor& logits) {
    return softmax(logits, 0);
}

std::vector<NamedParam> named_parameters(Network& net) {
    std::vector<NamedParam> out;
    out.push_back({"input_bn.gamma", net.input_bn.gamma});
    out.push_back({"input_bn.beta", net.input_bn.beta});
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
        append_parameters(net.blocks[i], "block" + std::to_string(i), out);
    }
    out.push_back({"fc.weight", net.fc_weight});
    out.push_back({"fc.bias", net.fc_bias});
    return out;
}

std::vector<NamedBuffer> named_buffers(Network& net) {
    std::vector<NamedBuffer> out;
    append_buffers(net.input_bn, "input_bn", out);
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
        append_buffers(net.blocks[i], "block" + std::to_string(i), out);
    }
    return out;
}

ParamCount count_parameters(Network& net) {
    ParamCount count;
    for (const NamedParam& param : named_parameters(net)) {
        const std::string module =
            param.name.substr(0, param.name.find('.'));
        if (count.rows.empty() || count.rows.back().module != module) {
            count.rows.push_back({module, 0});
        }
        count.rows.back().count += param.tensor.size();
        count.total += param.tensor.size();
    }
    return count;
}

}  // namespace skelact
