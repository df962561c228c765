#include "skelact/config_json.hpp"

#include <set>
#include <string>

namespace skelact {

namespace {

using nlohmann::json;

// Overlay readers share this guard: every key in the document must be one
// the reader consumed.
void reject_unknown_keys(const json& doc, const std::set<std::string>& known,
                         const char* where) {
    if (!doc.is_object()) {
        throw ConfigError(std::string(where) + ": expected a JSON object");
    }
    for (const auto& item : doc.items()) {
        if (!known.count(item.key())) {
            throw ConfigError(std::string(where) + ": unknown key \"" +
                              item.key() + "\"");
        }
    }
}

template <typename T>
void read_field(const json& doc, const char* key, T& out, const char* where) {
    if (!doc.contains(key)) return;
    try {
        out = doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + ": bad value for \"" + key +
                          "\": " + e.what());
    }
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
    json doc;
    doc["topology"] = cfg.topology;
    doc["strategy"] = to_string(cfg.strategy);
    doc["subsets"] = cfg.subsets;
    doc["in_channels"] = cfg.in_channels;
    auto& blocks = doc["blocks"] = json::array();
    for (const BlockSpec& spec : cfg.blocks) {
        blocks.push_back(
            {{"channels", spec.out_channels}, {"stride", spec.stride}});
    }
    doc["sam_kernel"] = cfg.stc.sam_kernel;
    doc["reduction"] = cfg.stc.reduction;
    doc["tam_kernel"] = cfg.stc.tam_kernel;
    doc["temporal_kernel"] = cfg.temporal_kernel;
    doc["window"] = cfg.window;
    doc["bodies"] = cfg.bodies;
    doc["num_classes"] = cfg.num_classes;
    doc["graph_warm_start"] = cfg.graph_warm_start;
    return doc;
}

ModelConfig model_config_from_json(const json& doc,
                                   const ModelConfig& defaults) {
    static const std::set<std::string> known = {
        "topology",    "strategy", "subsets",         "in_channels",
        "blocks",      "sam_kernel", "reduction",     "tam_kernel",
        "temporal_kernel", "window", "bodies",        "num_classes",
        "graph_warm_start"};
    const char* where = "model config";
    reject_unknown_keys(doc, known, where);
    ModelConfig cfg = defaults;
    read_field(doc, "topology", cfg.topology, where);
    if (doc.contains("strategy")) {
        std::string name;
        read_field(doc, "strategy", name, where);
        cfg.strategy = partition_strategy_from_string(name);
    }
    read_field(doc, "subsets", cfg.subsets, where);
    read_field(doc, "in_channels", cfg.in_channels, where);
    if (doc.contains("blocks")) {
        const json& rows = doc.at("blocks");
        if (!rows.is_array()) {
            throw ConfigError("model config: \"blocks\" must be an array");
        }
        cfg.blocks.clear();
        for (const json& row : rows) {
            static const std::set<std::string> block_keys = {"channels",
                                                             "stride"};
            reject_unknown_keys(row, block_keys, "model config block");
            BlockSpec spec;
            if (!row.contains("channels")) {
                throw ConfigError("model config block: missing \"channels\"");
            }
            read_field(row, "channels", spec.out_channels,
                       "model config block");
            read_field(row, "stride", spec.stride, "model config block");
            cfg.blocks.push_back(spec);
        }
    }
    read_field(doc, "sam_kernel", cfg.stc.sam_kernel, where);
    read_field(doc, "reduction", cfg.stc.reduction, where);
    read_field(doc, "tam_kernel", cfg.stc.tam_kernel, where);
    read_field(doc, "temporal_kernel", cfg.temporal_kernel, where);
    read_field(doc, "window", cfg.window, where);
    read_field(doc, "bodies", cfg.bodies, where);
    read_field(doc, "num_classes", cfg.num_classes, where);
    read_field(doc, "graph_warm_start", cfg.graph_warm_start, where);
    return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
    json doc;
    doc["base_lr"] = cfg.base_lr;
    doc["momentum"] = cfg.momentum;
    doc["weight_decay"] = cfg.weight_decay;
    doc["batch_size"] = cfg.batch_size;
    doc["milestones"] = cfg.milestones;
    doc["total_epochs"] = cfg.total_epochs;
    doc["seed"] = cfg.seed;
    doc["max_rot_deg"] = cfg.augment.max_rot_deg;
    doc["max_trans"] = cfg.augment.max_trans;
    doc["crop_len"] = cfg.augment.crop_len;
    doc["center_coords"] = cfg.center_coords;
    doc["decay_norm_and_gates"] = cfg.decay_norm_and_gates;
    doc["graph_freeze_epochs"] = cfg.graph_freeze_epochs;
    return doc;
}

TrainConfig train_config_from_json(const json& doc,
                                   const TrainConfig& defaults) {
    static const std::set<std::string> known = {
        "base_lr",     "momentum",     "weight_decay",
        "batch_size",  "milestones",   "total_epochs",
        "seed",        "max_rot_deg",  "max_trans",
        "crop_len",    "center_coords", "decay_norm_and_gates",
        "graph_freeze_epochs"};
    const char* where = "train config";
    reject_unknown_keys(doc, known, where);
    TrainConfig cfg = defaults;
    read_field(doc, "base_lr", cfg.base_lr, where);
    read_field(doc, "momentum", cfg.momentum, where);
    read_field(doc, "weight_decay", cfg.weight_decay, where);
    read_field(doc, "batch_size", cfg.batch_size, where);
    read_field(doc, "milestones", cfg.milestones, where);
    read_field(doc, "total_epochs", cfg.total_epochs, where);
    read_field(doc, "seed", cfg.seed, where);
    read_field(doc, "max_rot_deg", cfg.augment.max_rot_deg, where);
    read_field(doc, "max_trans", cfg.augment.max_trans, where);
    read_field(doc, "crop_len", cfg.augment.crop_len, where);
    read_field(doc, "center_coords", cfg.center_coords, where);
    read_field(doc, "decay_norm_and_gates", cfg.decay_norm_and_gates, where);
    read_field(doc, "graph_freeze_epochs", cfg.graph_freeze_epochs, where);
    return cfg;
}

}  // namespace skelact
