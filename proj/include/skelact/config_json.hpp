#pragma once

#include "json.hpp"
#include "skelact/network.hpp"
#include "skelact/train.hpp"

namespace skelact {

// JSON round-trip for the two config structs. The readers start from the
// supplied defaults, overlay only the keys present in the document, and
// reject unknown keys or ill-typed values with ConfigError — a typo in a
// config file must fail loudly, not silently fall back to a default.
nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc,
                                   const ModelConfig& defaults);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc,
                                   const TrainConfig& defaults);

}  // namespace skelact
