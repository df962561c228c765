#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "skelact/adjacency.hpp"
#include "skelact/ops.hpp"
#include "skelact/params.hpp"
#include "skelact/tensor.hpp"

namespace skelact {

// The default embedding width for the sample-graph projections.
std::size_t embed_width(std::size_t out_channels);

enum class AgclResidual { none, identity, pointwise };

// Adaptive graph convolution: per subset k the effective graph is
// fixed_k + learned_k + gate * sample_graph_k, where fixed_k is the constant
// normalized body graph, learned_k is a free parameter, and the sample graph
// comes from an embedded-similarity softmax of the input itself. The learned
// graphs and the gate start at zero, so a fresh layer reduces to the fixed
// graphs exactly.
struct AgclLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t embed_channels = 0;
    AdjacencySet adj;
    std::vector<Tensor> fixed;        // constants, [N, N] per subset
    std::vector<Tensor> weight;       // pointwise maps, [C_out, C_in]
    std::vector<Tensor> weight_bias;  // [C_out]
    std::vector<Tensor> learned;      // free graphs, [N, N], start 0
    std::vector<Tensor> theta_weight, theta_bias;  // [C_e, C_in], [C_e]
    std::vector<Tensor> phi_weight, phi_bias;
    Tensor gate;  // scalar, starts 0
    AgclResidual residual = AgclResidual::none;
    Tensor residual_weight;  // [C_out, C_in], pointwise residual only
    Tensor residual_bias;    // [C_out]
};

// The default residual rule: identity when channels match, else pointwise.
AgclLayer make_agcl(std::size_t c_in, std::size_t c_out,
                    const AdjacencySet& adj, std::mt19937_64& rng);
AgclLayer make_agcl(std::size_t c_in, std::size_t c_out,
                    const AdjacencySet& adj, AgclResidual residual,
                    std::mt19937_64& rng);

// Row-stochastic sample graph [N, N]: theta/phi project f_in [C_in, T, N] to
// [C_e, T, N], both flatten to (C_e*T) x N, and softmax(theta^T phi) runs
// over each row (every source vertex distributes attention over targets).
Tensor compute_sample_graph(const Tensor& f_in, const Tensor& theta_weight,
                            const Tensor& theta_bias,
                            const Tensor& phi_weight, const Tensor& phi_bias);

// f_in [C_in, T, N] -> [C_out, T, N].
Tensor agcl_forward(AgclLayer& layer, const Tensor& f_in);

// Fixed-graph reference: f_out = sum_k W_k (f_in (fixed_k * mask_k)), the
// masked plain graph convolution the adaptive layer collapses to when its
// learned parts are zero. Serves as the oracle for that degenerate case.
Tensor gcn_baseline_forward(const Tensor& f_in, const AdjacencySet& adj,
                            const std::vector<Tensor>& masks,
                            const std::vector<Tensor>& weights,
                            const std::vector<Tensor>& biases);

void append_parameters(AgclLayer& layer, const std::string& prefix,
                       std::vector<NamedParam>& out);

}  // namespace skelact
