#ifndef TERMSPAN_CHECKPOINT_HPP
#define TERMSPAN_CHECKPOINT_HPP

#include <json.hpp>

#include "termspan/model.hpp"

namespace termspan {

// Structured-text checkpoint: format marker, version, full config, vocab and
// both parameter stores. Doubles round-trip exactly through the JSON layer.
inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "termspan-checkpoint";

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace termspan

#endif  // TERMSPAN_CHECKPOINT_HPP
