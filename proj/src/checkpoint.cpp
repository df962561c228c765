#include "skelact/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skelact/config_json.hpp"

namespace skelact {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'E', 'M', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kFormat = "skelact-checkpoint-v1";

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void put_f64(std::ostream& out, double value) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64(const std::vector<unsigned char>& raw, std::size_t offset) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(raw[offset + i]) << (8 * i);
    }
    return std::bit_cast<double>(v);
}

// Name of the first structural field where the two configs disagree, or ""
// when they match.
std::string first_config_difference(const ModelConfig& a,
                                    const ModelConfig& b) {
    if (a.topology != b.topology) return "topology";
    if (a.strategy != b.strategy) return "strategy";
    if (a.subsets != b.subsets) return "subsets";
    if (a.in_channels != b.in_channels) return "in_channels";
    if (a.blocks.size() != b.blocks.size()) return "blocks";
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        if (a.blocks[i].out_channels != b.blocks[i].out_channels ||
            a.blocks[i].stride != b.blocks[i].stride) {
            return "blocks";
        }
    }
    if (a.stc.sam_kernel != b.stc.sam_kernel) return "sam_kernel";
    if (a.stc.reduction != b.stc.reduction) return "reduction";
    if (a.stc.tam_kernel != b.stc.tam_kernel) return "tam_kernel";
    if (a.temporal_kernel != b.temporal_kernel) return "temporal_kernel";
    if (a.window != b.window) return "window";
    if (a.bodies != b.bodies) return "bodies";
    if (a.num_classes != b.num_classes) return "num_classes";
    if (a.graph_warm_start != b.graph_warm_start) return "graph_warm_start";
    return "";
}

}  // namespace

void checkpoint_save(Network& net, const SgdState& sgd,
                     std::size_t epochs_completed,
                     const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }

    auto params = named_parameters(net);
    auto buffers = named_buffers(net);
    if (!sgd.buffers.empty() && sgd.buffers.size() != params.size()) {
        throw ArgumentError("checkpoint_save: optimizer tracks " +
                            std::to_string(sgd.buffers.size()) +
                            " parameters, model has " +
                            std::to_string(params.size()));
    }

    json manifest;
    manifest["format"] = kFormat;
    manifest["epochs_completed"] = epochs_completed;
    manifest["config"] = model_config_to_json(net.config);

    const auto bin_path = dir / "model.bin";
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot create " + bin_path.string());
    bin.write(kMagic, 4);
    put_u32(bin, kVersion);
    std::size_t offset = 8;

    auto& param_rows = manifest["params"] = json::array();
    for (const NamedParam& p : params) {
        const std::vector<double>& v = p.tensor.values();
        param_rows.push_back({{"name", p.name},
                              {"shape", p.tensor.shape()},
                              {"offset", offset}});
        for (double x : v) put_f64(bin, x);
        offset += 8 * v.size();
    }
    auto& buffer_rows = manifest["buffers"] = json::array();
    for (const NamedBuffer& b : buffers) {
        buffer_rows.push_back({{"name", b.name},
                               {"size", b.values->size()},
                               {"offset", offset}});
        for (double x : *b.values) put_f64(bin, x);
        offset += 8 * b.values->size();
    }
    auto& momentum_rows = manifest["momentum"] = json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t count = params[i].tensor.size();
        momentum_rows.push_back(
            {{"name", params[i].name}, {"offset", offset}});
        if (i < sgd.buffers.size() && !sgd.buffers[i].empty()) {
            if (sgd.buffers[i].size() != count) {
                throw ArgumentError("checkpoint_save: momentum for " +
                                    params[i].name + " holds " +
                                    std::to_string(sgd.buffers[i].size()) +
                                    " values, parameter has " +
                                    std::to_string(count));
            }
            for (double x : sgd.buffers[i]) put_f64(bin, x);
        } else {
            for (std::size_t j = 0; j < count; ++j) put_f64(bin, 0.0);
        }
        offset += 8 * count;
    }
    if (!bin) throw IoError("write failed: " + bin_path.string());
    bin.close();

    const auto json_path = dir / "model.json";
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot create " + json_path.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + json_path.string());
}

Checkpoint checkpoint_load(const std::filesystem::path& dir,
                           const ModelConfig* expected) {
    const auto json_path = dir / "model.json";
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open " + json_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("malformed manifest " + json_path.string() + ": " +
                          e.what());
    }

    ModelConfig cfg;
    std::size_t epochs = 0;
    try {
        if (manifest.at("format").get<std::string>() != kFormat) {
            throw FormatError("unknown checkpoint format in " +
                              json_path.string());
        }
        epochs = manifest.at("epochs_completed").get<std::size_t>();
        cfg = model_config_from_json(manifest.at("config"), ModelConfig{});
    } catch (const json::exception& e) {
        throw FormatError("malformed manifest " + json_path.string() + ": " +
                          e.what());
    } catch (const ConfigError& e) {
        throw FormatError("bad config in " + json_path.string() + ": " +
                          e.what());
    }
    if (expected != nullptr) {
        const std::string field = first_config_difference(cfg, *expected);
        if (!field.empty()) {
            throw FormatError("checkpoint " + dir.string() +
                              " does not match the requested model: field " +
                              field + " differs");
        }
    }

    const auto bin_path = dir / "model.bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot open " + bin_path.string());
    std::vector<unsigned char> raw(
        (std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (raw.size() < 8 || std::memcmp(raw.data(), kMagic, 4) != 0) {
        throw FormatError("bad magic in " + bin_path.string());
    }
    const std::uint32_t version = static_cast<std::uint32_t>(raw[4]) |
                                  (static_cast<std::uint32_t>(raw[5]) << 8) |
                                  (static_cast<std::uint32_t>(raw[6]) << 16) |
                                  (static_cast<std::uint32_t>(raw[7]) << 24);
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " +
                          std::to_string(version) + " in " +
                          bin_path.string());
    }

    Checkpoint ckpt;
    try {
        ckpt.net = make_network(cfg, 0);
    } catch (const ConfigError& e) {
        throw FormatError("bad config in " + json_path.string() + ": " +
                          e.what());
    }
    ckpt.epochs_completed = epochs;
    auto params = named_parameters(ckpt.net);
    auto buffers = named_buffers(ckpt.net);

    // Reads one manifest row's payload into `dst`, enforcing name order and
    // byte bounds so a truncated or reshuffled file cannot load silently.
    std::size_t expected_bytes = 8;
    auto fill = [&](const json& row, const std::string& want_name,
                    std::vector<double>& dst, const char* kind) {
        std::string name;
        std::size_t offset = 0;
        try {
            name = row.at("name").get<std::string>();
            offset = row.at("offset").get<std::size_t>();
        } catch (const json::exception& e) {
            throw FormatError("malformed manifest " + json_path.string() +
                              ": " + e.what());
        }
        if (name != want_name) {
            throw FormatError(std::string(kind) + " order mismatch in " +
                              json_path.string() + ": stored " + name +
                              ", model expects " + want_name);
        }
        if (offset + 8 * dst.size() > raw.size()) {
            throw FormatError("payload for " + name + " runs past the end "
                              "of " + bin_path.string());
        }
        for (std::size_t j = 0; j < dst.size(); ++j) {
            dst[j] = read_f64(raw, offset + 8 * j);
        }
        expected_bytes += 8 * dst.size();
    };

    try {
        const json& param_rows = manifest.at("params");
        if (param_rows.size() != params.size()) {
            throw FormatError("checkpoint stores " +
                              std::to_string(param_rows.size()) +
                              " parameters, model has " +
                              std::to_string(params.size()));
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Shape stored =
                param_rows[i].at("shape").get<Shape>();
            if (stored != params[i].tensor.shape()) {
                throw FormatError("parameter " + params[i].name +
                                  " stored as " + shape_to_string(stored) +
                                  ", model expects " +
                                  shape_to_string(params[i].tensor.shape()));
            }
            fill(param_rows[i], params[i].name, params[i].tensor.values(),
                 "parameter");
        }
        const json& buffer_rows = manifest.at("buffers");
        if (buffer_rows.size() != buffers.size()) {
            throw FormatError("checkpoint stores " +
                              std::to_string(buffer_rows.size()) +
                              " buffers, model has " +
                              std::to_string(buffers.size()));
        }
        for (std::size_t i = 0; i < buffers.size(); ++i) {
            const std::size_t stored =
                buffer_rows[i].at("size").get<std::size_t>();
            if (stored != buffers[i].values->size()) {
                throw FormatError("buffer " + buffers[i].name + " stored " +
                                  std::to_string(stored) +
                                  " values, model expects " +
                                  std::to_string(buffers[i].values->size()));
            }
            fill(buffer_rows[i], buffers[i].name, *buffers[i].values,
                 "buffer");
        }
        const json& momentum_rows = manifest.at("momentum");
        if (momentum_rows.size() != params.size()) {
            throw FormatError("checkpoint stores " +
                              std::to_string(momentum_rows.size()) +
                              " momentum slots, model has " +
                              std::to_string(params.size()) + " parameters");
        }
        ckpt.sgd.buffers.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            ckpt.sgd.buffers[i].assign(params[i].tensor.size(), 0.0);
            fill(momentum_rows[i], params[i].name, ckpt.sgd.buffers[i],
                 "momentum");
        }
    } catch (const json::exception& e) {
        throw FormatError("malformed manifest " + json_path.string() + ": " +
                          e.what());
    }
    if (expected_bytes != raw.size()) {
        throw FormatError("payload size mismatch in " + bin_path.string() +
                          ": " + std::to_string(raw.size()) + " bytes, "
                          "manifest accounts for " +
                          std::to_string(expected_bytes));
    }
    return ckpt;
}

}  // namespace skelact
