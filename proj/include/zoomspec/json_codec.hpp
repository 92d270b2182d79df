#pragma once

// JSON encodings shared by the file formats (annotations, scene configs,
// detections). Field names follow the on-disk schemas.

#include "json.hpp"
#include "zoomspec/iqcore.hpp"

#include <string>

namespace zoomspec {

nlohmann::json emitter_to_json(const EmitterTruth& e);
// `path` prefixes schema error messages, e.g. "emitters[2]".
EmitterTruth emitter_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json detection_to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& j, const std::string& path);

} // namespace zoomspec
