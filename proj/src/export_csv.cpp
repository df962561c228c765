#include "skelact/export_csv.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "skelact/agcl.hpp"
#include "skelact/attention.hpp"
#include "skelact/ops.hpp"

namespace skelact {

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Rows of `cols` comma-separated values, CRLF-terminated. Binary mode keeps
// the line endings exactly as written.
void write_csv(const std::filesystem::path& file,
               const std::vector<double>& values, std::size_t rows,
               std::size_t cols) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot create " + file.string());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c > 0) out << ',';
            out << format_value(values[r * cols + c]);
        }
        out << "\r\n";
    }
    if (!out) throw IoError("write failed: " + file.string());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
}

}  // namespace

void export_graphs(Network& net, const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    const std::size_t n = net.topology.num_joints;
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
        const AgclLayer& agcl = net.blocks[l].agcl;
        for (std::size_t k = 0; k < agcl.adj.subsets(); ++k) {
            const std::vector<double>& fixed = agcl.fixed[k].values();
            const std::vector<double>& learned = agcl.learned[k].values();
            std::vector<double> sum(fixed.size());
            for (std::size_t i = 0; i < sum.size(); ++i) {
                sum[i] = fixed[i] + learned[i];
            }
            write_csv(out_dir / ("adjacency_k" + std::to_string(k) +
                                 "_layer" + std::to_string(l) + ".csv"),
                      sum, n, n);
        }
    }
    const auto gate_path = out_dir / "gate.csv";
    std::ofstream out(gate_path, std::ios::binary);
    if (!out) throw IoError("cannot create " + gate_path.string());
    out << "layer,alpha\r\n";
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
        out << l << ','
            << format_value(net.blocks[l].agcl.gate.values()[0]) << "\r\n";
    }
    if (!out) throw IoError("write failed: " + gate_path.string());
}

void export_attention(Network& net, const Dataset& data,
                      const std::string& sample_id, StreamKind stream,
                      const std::filesystem::path& out_dir,
                      bool center_coords) {
    const SkeletonSequence* sample = nullptr;
    for (const SkeletonSequence& s : data.samples) {
        if (s.id == sample_id) {
            sample = &s;
            break;
        }
    }
    if (sample == nullptr) {
        throw ArgumentError("export_attention: no sample with id " +
                            sample_id);
    }
    if (stream_channels(stream) != net.config.in_channels) {
        throw ConfigError("export_attention: stream " + to_string(stream) +
                          " carries " + std::to_string(stream_channels(stream)) +
                          " channels, model expects " +
                          std::to_string(net.config.in_channels));
    }
    ensure_dir(out_dir);

    // The evaluation preprocessing, then a replay of the forward pass that
    // taps each block's attention stage. Propagation between blocks uses the
    // real block forward; only the taps recompute the prefix.
    SkeletonSequence s =
        derive_stream(*sample, data.topology, stream, center_coords);
    s = pad_repeat(s, static_cast<long>(net.config.window));
    s = center_crop(s, net.config.window);
    NoGradGuard guard;
    Tensor x = Tensor::from_data({s.channels, s.frames, s.joints, s.bodies},
                                 s.data);
    Tensor h = network_input_norm(net, x, false);
    Tensor body =
        reshape(narrow(h, 3, 0, 1),
                {net.config.in_channels, net.config.window,
                 net.topology.num_joints});
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
        Block& block = net.blocks[l];
        Tensor pre = relu(
            batch_norm(agcl_forward(block.agcl, body), 0, block.bn1, false));
        const Tensor sam_map = sam_attention(block.stc.sam, pre);
        const Tensor after_sam = sam_forward(block.stc.sam, pre);
        const Tensor pooled = tam_spatial_pool(after_sam);
        const Tensor kernels = tam_long_kernels(block.stc.tam, pooled);
        const Tensor after_tam = tam_forward(block.stc.tam, after_sam);
        const Tensor cam_map = cam_attention(block.stc.cam, after_tam);

        const std::string tag =
            "_layer" + std::to_string(l) + "_sample" + sample_id + ".csv";
        write_csv(out_dir / ("sam" + tag), sam_map.values(),
                  sam_map.size(), 1);
        write_csv(out_dir / ("tam_kernels" + tag), kernels.values(),
                  kernels.extent(0), kernels.extent(1));
        write_csv(out_dir / ("cam" + tag), cam_map.values(),
                  cam_map.size(), 1);
        body = block_forward(block, body, false);
    }
}

}  // namespace skelact
