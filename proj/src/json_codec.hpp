#pragma once

#include "llmind/api_corpus.hpp"
#include "llmind/report.hpp"

#include <json.hpp>

// Internal JSON (de)serialization shared by the corpus loader and the wire
// codec. Throws llmind::Error (Validation) on shape violations.
namespace llmind::jsoncodec {

nlohmann::ordered_json profile_to_json(const DeviceApiProfile& profile);
DeviceApiProfile profile_from_json(const nlohmann::ordered_json& doc);

nlohmann::ordered_json report_to_json(const DeviceReport& report);
DeviceReport report_from_json(const nlohmann::ordered_json& doc);

} // namespace llmind::jsoncodec
