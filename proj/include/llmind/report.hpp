#pragma once

#include "llmind/api_corpus.hpp"
#include "llmind/fsm_executor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace llmind {

enum class DeviceStatus { Ok, Fault };

const char* device_status_name(DeviceStatus status);

/// What an agent tells the coordinator in answer to a poll: device health,
/// observable attributes, the latest subtask's completion status, and (once
/// per version) an API profile update.
struct DeviceReport {
    std::string device_id;
    DeviceStatus status = DeviceStatus::Ok;
    std::map<std::string, std::string> attributes;
    std::optional<std::pair<std::uint64_t, CompletionStatus>> subtask_status;
    // Rendered return value of that subtask's device call, Completed only.
    std::optional<std::string> subtask_result;
    std::optional<DeviceApiProfile> profile_update;

    bool operator==(const DeviceReport&) const = default;
};

} // namespace llmind
