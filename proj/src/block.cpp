#include "skelact/block.hpp"

#include "skelact/init.hpp"

namespace skelact {

std::size_t block_frames_out(std::size_t frames_in, long stride) {
    // Temporal conv with kernel k, pad (k-1)/2: length (T - 1)/stride + 1.
    return (frames_in - 1) / static_cast<std::size_t>(stride) + 1;
}

Block make_block(std::size_t c_in, const BlockSpec& spec,
                 const AdjacencySet& adj, std::size_t frames_in,
                 const StcConfig& stc_cfg, std::size_t temporal_kernel,
                 std::mt19937_64& rng) {
    if (spec.stride != 1 && spec.stride != 2) {
        throw ConfigError("block stride must be 1 or 2, got " +
                          std::to_string(spec.stride));
    }
    if (temporal_kernel == 0 || temporal_kernel % 2 == 0) {
        throw ConfigError("temporal kernel must be odd, got " +
                          std::to_string(temporal_kernel));
    }
    Block block;
    block.in_channels = c_in;
    block.out_channels = spec.out_channels;
    block.stride = spec.stride;
    block.temporal_kernel = temporal_kernel;
    block.agcl =
        make_agcl(c_in, spec.out_channels, adj, AgclResidual::none, rng);
    block.bn1 = BatchNormState::make(spec.out_channels);
    block.stc = make_stc(spec.out_channels, frames_in, stc_cfg);
    block.tconv_weight = glorot_uniform(
        {spec.out_channels, spec.out_channels, temporal_kernel},
        spec.out_channels * temporal_kernel,
        spec.out_channels * temporal_kernel, rng);
    block.tconv_bias = Tensor::zeros({spec.out_channels}, true);
    block.bn2 = BatchNormState::make(spec.out_channels);
    block.residual_conv = (c_in != spec.out_channels || spec.stride != 1);
    if (block.residual_conv) {
        block.residual_weight = glorot_uniform(
            {spec.out_channels, c_in, 1}, c_in, spec.out_channels, rng);
        block.residual_bias = Tensor::zeros({spec.out_channels}, true);
    }
    return block;
}

Tensor block_forward(Block& block, const Tensor& f_in, bool training) {
    if (f_in.rank() != 3 || f_in.extent(0) != block.in_channels) {
        throw DimensionError(
            "block_forward: expected [" + std::to_string(block.in_channels) +
            ", T, N], got " + shape_to_string(f_in.shape()));
    }
    Tensor h = agcl_forward(block.agcl, f_in);
    h = batch_norm(h, 0, block.bn1, training);
    h = relu(h);
    h = stc_forward(block.stc, h);
    h = conv1d(h, 1, block.tconv_weight, block.tconv_bias, block.stride,
               static_cast<long>((block.temporal_kernel - 1) / 2));
    h = batch_norm(h, 0, block.bn2, training);
    const Tensor res =
        block.residual_conv
            ? conv1d(f_in, 1, block.residual_weight, block.residual_bias,
                     block.stride, 0)
            : f_in;
    return relu(add(h, res));
}

void append_parameters(Block& block, const std::string& prefix,
                       std::vector<NamedParam>& out) {
    append_parameters(block.agcl, prefix + ".agcl", out);
    out.push_back({prefix + ".bn1.gamma", block.bn1.gamma});
    out.push_back({prefix + ".bn1.beta", block.bn1.beta});
    append_parameters(block.stc, prefix + ".stc", out);
    out.push_back({prefix + ".tconv_weight", block.tconv_weight});
    out.push_back({prefix + ".tconv_bias", block.tconv_bias});
    out.push_back({prefix + ".bn2.gamma", block.bn2.gamma});
    out.push_back({prefix + ".bn2.beta", block.bn2.beta});
    if (block.residual_conv) {
        out.push_back({prefix + ".residual_weight", block.residual_weight});
        out.push_back({prefix + ".residual_bias", block.residual_bias});
    }
}

void append_buffers(BatchNormState& bn, const std::string& prefix,
                    std::vector<NamedBuffer>& out) {
    out.push_back({prefix + ".running_mean", &bn.running_mean});
    out.push_back({prefix + ".running_var", &bn.running_var});
}

void append_buffers(Block& block, const std::string& prefix,
                    std::vector<NamedBuffer>& out) {
    append_buffers(block.bn1, prefix + ".bn1", out);
    append_buffers(block.bn2, prefix + ".bn2", out);
}

}  // namespace skelact
