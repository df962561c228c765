#pragma once

#include <cstddef>
#include <random>

#include "skelact/agcl.hpp"
#include "skelact/attention.hpp"
#include "skelact/ops.hpp"
#include "skelact/params.hpp"

namespace skelact {

struct BlockSpec {
    std::size_t out_channels = 0;
    long stride = 1;  // temporal stride, 1 or 2
};

// One backbone block: adaptive graph conv -> BN -> ReLU -> attention stack ->
// temporal conv (kernel k_t, stride s) -> BN, plus a residual link from the
// block input (identity, or a strided pointwise conv when the shape changes),
// added before the final ReLU. The graph conv runs without an internal
// residual; the block-level link is the only skip path.
struct Block {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    long stride = 1;
    std::size_t temporal_kernel = 9;
    AgclLayer agcl;
    BatchNormState bn1;
    StcModule stc;
    Tensor tconv_weight;  // [C_out, C_out, k_t]
    Tensor tconv_bias;    // [C_out]
    BatchNormState bn2;
    bool residual_conv = false;
    Tensor residual_weight;  // [C_out, C_in, 1], strided
    Tensor residual_bias;    // [C_out]
};

// frames_in is the temporal extent this block sees (the attention stack's FC
// sizes bind to it).
Block make_block(std::size_t c_in, const BlockSpec& spec,
                 const AdjacencySet& adj, std::size_t frames_in,
                 const StcConfig& stc_cfg, std::size_t temporal_kernel,
                 std::mt19937_64& rng);

// [C_in, T, N] -> [C_out, (T-1)/stride + 1, N].
Tensor block_forward(Block& block, const Tensor& f_in, bool training);

// The temporal extent a block emits for a given input extent.
std::size_t block_frames_out(std::size_t frames_in, long stride);

void append_parameters(Block& block, const std::string& prefix,
                       std::vector<NamedParam>& out);
void append_buffers(Block& block, const std::string& prefix,
                    std::vector<NamedBuffer>& out);
void append_buffers(BatchNormState& bn, const std::string& prefix,
                    std::vector<NamedBuffer>& out);

}  // namespace skelact
