#include "skelact/agcl.hpp"

#include <algorithm>

#include "skelact/init.hpp"

namespace skelact {

std::size_t embed_width(std::size_t out_channels) {
    return std::max<std::size_t>(1, out_channels / 4);
}

AgclLayer make_agcl(std::size_t c_in, std::size_t c_out,
                    const AdjacencySet& adj, std::mt19937_64& rng) {
    return make_agcl(c_in, c_out, adj,
                     c_in == c_out ? AgclResidual::identity
                                   : AgclResidual::pointwise,
                     rng);
}

AgclLayer make_agcl(std::size_t c_in, std::size_t c_out,
                    const AdjacencySet& adj, AgclResidual residual,
                    std::mt19937_64& rng) {
    if (c_in == 0 || c_out == 0 || adj.subsets() == 0) {
        throw ConfigError("make_agcl: channels and subsets must be positive");
    }
    if (residual == AgclResidual::identity && c_in != c_out) {
        throw ConfigError("make_agcl: identity residual needs matching "
                          "channels, got " + std::to_string(c_in) + " -> " +
                          std::to_string(c_out));
    }
    AgclLayer layer;
    layer.in_channels = c_in;
    layer.out_channels = c_out;
    layer.embed_channels = embed_width(c_out);
    layer.adj = adj;
    layer.residual = residual;
    const std::size_t n = adj.num_joints;
    for (std::size_t k = 0; k < adj.subsets(); ++k) {
        layer.fixed.push_back(
            Tensor::from_data({n, n}, adj.matrices[k], false));
        layer.weight.push_back(
            glorot_uniform({c_out, c_in}, c_in, c_out, rng));
        layer.weight_bias.push_back(Tensor::zeros({c_out}, true));
        layer.learned.push_back(Tensor::zeros({n, n}, true));
        layer.theta_weight.push_back(glorot_uniform(
            {layer.embed_channels, c_in}, c_in, layer.embed_channels, rng));
        layer.theta_bias.push_back(
            Tensor::zeros({layer.embed_channels}, true));
        layer.phi_weight.push_back(glorot_uniform(
            {layer.embed_channels, c_in}, c_in, layer.embed_channels, rng));
        layer.phi_bias.push_back(Tensor::zeros({layer.embed_channels}, true));
    }
    layer.gate = Tensor::zeros({1}, true);
    if (residual == AgclResidual::pointwise) {
        layer.residual_weight = glorot_uniform({c_out, c_in}, c_in, c_out, rng);
        layer.residual_bias = Tensor::zeros({c_out}, true);
    }
    return layer;
}

Tensor compute_sample_graph(const Tensor& f_in, const Tensor& theta_weight,
                            const Tensor& theta_bias,
                            const Tensor& phi_weight, const Tensor& phi_bias) {
    if (f_in.rank() != 3) {
        throw DimensionError("compute_sample_graph: input must be [C, T, N], "
                             "got " + shape_to_string(f_in.shape()));
    }
    const std::size_t e = theta_weight.extent(0);
    const std::size_t t = f_in.extent(1);
    const std::size_t n = f_in.extent(2);
    const Tensor theta = reshape(
        conv_pointwise(f_in, theta_weight, theta_bias), {e * t, n});
    const Tensor phi = reshape(
        conv_pointwise(f_in, phi_weight, phi_bias), {e * t, n});
    return softmax(matmul(transpose(theta), phi), 1);
}

namespace {

// One subset's contribution W_k (f_in G): graph mixing on the joint axis,
// then the pointwise channel map.
Tensor graph_term(const Tensor& f_in, const Tensor& graph, const Tensor& w,
                  const Tensor& b) {
    const std::size_t c = f_in.extent(0);
    const std::size_t t = f_in.extent(1);
    const std::size_t n = f_in.extent(2);
    Tensor mixed = reshape(matmul(reshape(f_in, {c * t, n}), graph),
                           {c, t, n});
    return conv_pointwise(mixed, w, b);
}

}  // namespace

Tensor agcl_forward(AgclLayer& layer, const Tensor& f_in) {
    if (f_in.rank() != 3 || f_in.extent(0) != layer.in_channels ||
        f_in.extent(2) != layer.adj.num_joints) {
        throw DimensionError(
            "agcl_forward: expected [" + std::to_string(layer.in_channels) +
            ", T, " + std::to_string(layer.adj.num_joints) + "], got " +
            shape_to_string(f_in.shape()));
    }
    Tensor out;
    for (std::size_t k = 0; k < layer.adj.subsets(); ++k) {
        Tensor graph = add(layer.fixed[k], layer.learned[k]);
        const Tensor sample = compute_sample_graph(
            f_in, layer.theta_weight[k], layer.theta_bias[k],
            layer.phi_weight[k], layer.phi_bias[k]);
        graph = add(graph, scale_by(sample, layer.gate));
        const Tensor term = graph_term(f_in, graph, layer.weight[k],
                                       layer.weight_bias[k]);
        out = out.defined() ? add(out, term) : term;
    }
    switch (layer.residual) {
        case AgclResidual::none: break;
        case AgclResidual::identity: out = add(out, f_in); break;
        case AgclResidual::pointwise:
            out = add(out, conv_pointwise(f_in, layer.residual_weight,
                                          layer.residual_bias));
            break;
    }
    return out;
}

Tensor gcn_baseline_forward(const Tensor& f_in, const AdjacencySet& adj,
                            const std::vector<Tensor>& masks,
                            const std::vector<Tensor>& weights,
                            const std::vector<Tensor>& biases) {
    if (masks.size() != adj.subsets() || weights.size() != adj.subsets() ||
        biases.size() != adj.subsets()) {
        throw DimensionError("gcn_baseline_forward: need one mask, weight, "
                             "and bias per subset");
    }
    if (f_in.rank() != 3 || f_in.extent(2) != adj.num_joints) {
        throw DimensionError("gcn_baseline_forward: expected [C, T, " +
                             std::to_string(adj.num_joints) + "], got " +
                             shape_to_string(f_in.shape()));
    }
    const std::size_t n = adj.num_joints;
    Tensor out;
    for (std::size_t k = 0; k < adj.subsets(); ++k) {
        const Tensor fixed = Tensor::from_data({n, n}, adj.matrices[k], false);
        const Tensor graph = mul(fixed, masks[k]);
        const Tensor term = graph_term(f_in, graph, weights[k], biases[k]);
        out = out.defined() ? add(out, term) : term;
    }
    return out;
}

void append_parameters(AgclLayer& layer, const std::string& prefix,
                       std::vector<NamedParam>& out) {
    for (std::size_t k = 0; k < layer.adj.subsets(); ++k) {
        const std::string tag = "." + std::to_string(k);
        out.push_back({prefix + ".W" + tag, layer.weight[k]});
        out.push_back({prefix + ".W_bias" + tag, layer.weight_bias[k]});
        out.push_back({prefix + ".B" + tag, layer.learned[k]});
        out.push_back({prefix + ".theta_weight" + tag, layer.theta_weight[k]});
        out.push_back({prefix + ".theta_bias" + tag, layer.theta_bias[k]});
        out.push_back({prefix + ".phi_weight" + tag, layer.phi_weight[k]});
        out.push_back({prefix + ".phi_bias" + tag, layer.phi_bias[k]});
    }
    out.push_back({prefix + ".alpha", layer.gate});
    if (layer.residual == AgclResidual::pointwise) {
        out.push_back({prefix + ".residual_weight", layer.residual_weight});
        out.push_back({prefix + ".residual_bias", layer.residual_bias});
    }
}

}  // namespace skelact
