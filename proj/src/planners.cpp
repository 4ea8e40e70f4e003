#include "llmind/planners.hpp"

#include "llmind/errors.hpp"
#include "llmind/numberwords.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace llmind {

namespace {

std::string seconds_text(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

std::string lowercase(const std::string& text) {
    std::string out = text;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string shelf_words(int shelf) {
    auto words = numberwords::to_words(std::to_string(shelf));
    return words ? *words : std::to_string(shelf);
}

std::optional<int> robot_index(const std::string& device_id) {
    const std::string prefix = "robot_";
    if (device_id.rfind(prefix, 0) != 0 || device_id.size() == prefix.size()) {
        return std::nullopt;
    }
    int value = 0;
    for (std::size_t i = prefix.size(); i < device_id.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(device_id[i]))) {
            return std::nullopt;
        }
        value = value * 10 + (device_id[i] - '0');
    }
    return value;
}

} // namespace

// ---------------------------------------------------------------------------
// WarehousePlanner
// ---------------------------------------------------------------------------

bool WarehousePlanner::triggers(const std::string& instruction_text) {
    const std::string text = lowercase(instruction_text);
    return text.find("vacan") != std::string::npos &&
           text.find("shel") != std::string::npos;
}

bool WarehousePlanner::all_terminal() const {
    for (const auto& [device_id, script] : scripts_) {
        if (script.phase != Phase::Done && script.phase != Phase::Failed) {
            return false;
        }
    }
    return true;
}

bool WarehousePlanner::all_succeeded() const {
    if (!active_ || scripts_.empty()) return false;
    for (const auto& [device_id, script] : scripts_) {
        if (script.phase != Phase::Done) return false;
    }
    return true;
}

std::map<int, std::string> WarehousePlanner::vacancy_results() const {
    std::map<int, std::string> out;
    for (const auto& [device_id, script] : scripts_) {
        if (script.phase == Phase::Done && script.vacancy) {
            out[script.shelf] = *script.vacancy;
        }
    }
    return out;
}

bool WarehousePlanner::finished(const std::map<std::string, DeviceView>&) const {
    return active_ && all_terminal();
}

std::vector<PlannedSubtask> WarehousePlanner::plan(
    const std::vector<Instruction>& instructions,
    const std::map<std::string, DeviceView>& devices,
    const std::set<std::string>& dispatchable, std::uint64_t round) {
    for (const auto& instruction : instructions) {
        if (!triggers(instruction.text)) {
            record_event(round, "no script for instruction: " + instruction.text);
            continue;
        }
        if (active_ && !all_terminal()) continue; // a plan is already running
        scripts_.clear();
        for (const auto& [device_id, view] : devices) {
            if (auto shelf = robot_index(device_id)) {
                Script script;
                script.shelf = *shelf;
                scripts_.emplace(device_id, script);
            }
        }
        active_ = true;
        record_event(round, "instruction accepted, scripting " +
                                std::to_string(scripts_.size()) + " robots");
    }
    if (!active_) return {};

    std::vector<PlannedSubtask> out;
    for (auto& [device_id, script] : scripts_) {
        auto view_it = devices.find(device_id);
        if (view_it == devices.end()) continue;
        const DeviceView& view = view_it->second;

        const bool awaiting = script.phase == Phase::MoveSent ||
                              script.phase == Phase::IdentifySent;
        if (awaiting && view.resolved_id == script.active_subtask) {
            if (view.resolved_status == CompletionStatus::Completed) {
                if (script.phase == Phase::MoveSent) {
                    script.phase = Phase::MoveDone;
                    script.retries = 0;
                } else {
                    script.vacancy = view.resolved_result.value_or("");
                    script.phase = Phase::Done;
                    record_event(round, device_id + " shelf " +
                                            std::to_string(script.shelf) +
                                            " vacancy: " + *script.vacancy);
                }
            } else if (script.retries < 1) {
                // Re-issue the failed step once.
                ++script.retries;
                script.phase = script.phase == Phase::MoveSent
                                   ? Phase::Idle
                                   : Phase::MoveDone;
                record_event(round, device_id + " step failed, re-issuing");
            } else {
                script.phase = Phase::Failed;
                record_event(round, device_id + " script failed");
            }
        } else if (awaiting && view.outstanding &&
                   dispatchable.count(device_id) != 0) {
            // Unreported long enough that the coordinator re-opened the
            // device: replace the lost subtask once, then give up.
            if (script.retries < 1) {
                ++script.retries;
                script.phase = script.phase == Phase::MoveSent
                                   ? Phase::Idle
                                   : Phase::MoveDone;
                record_event(round, device_id + " unreported, re-issuing");
            } else {
                script.phase = Phase::Failed;
                record_event(round, device_id + " script failed (silent)");
            }
        }

        if (dispatchable.count(device_id) == 0) continue;
        const std::string words = shelf_words(script.shelf);
        if (script.phase == Phase::Idle) {
            out.push_back({device_id, "Move to shelf " + words + "."});
        } else if (script.phase == Phase::MoveDone) {
            out.push_back(
                {device_id, "Identify the vacancy in shelf " + words + "."});
        }
    }
    return out;
}

void WarehousePlanner::on_dispatched(const std::string& device_id,
                                     const SubtaskSpec& subtask) {
    auto it = scripts_.find(device_id);
    if (it == scripts_.end()) return;
    it->second.active_subtask = subtask.subtask_id;
    it->second.phase = subtask.text.rfind("Move", 0) == 0 ? Phase::MoveSent
                                                          : Phase::IdentifySent;
}

// ---------------------------------------------------------------------------
// WifiQosPlanner
// ---------------------------------------------------------------------------

WifiQosPlanner::WifiQosPlanner(WifiQosConfig config) : config_(std::move(config)) {
    if (config_.tunable_device.empty()) {
        throw Error(ErrorCode::Config, "wifi qos planner needs a tunable device");
    }
    if (config_.schedule.empty()) {
        throw Error(ErrorCode::Config, "wifi qos planner needs a schedule");
    }
}

void WifiQosPlanner::set_deadline(const std::string& device_id, double seconds) {
    config_.upload_deadlines[device_id] = seconds;
}

PlannedSubtask WifiQosPlanner::propose(std::size_t target) const {
    const auto [cw_min, cw_max] = config_.schedule[target];
    return {config_.tunable_device,
            "Set the contention window exponents to " + std::to_string(cw_min) +
                " and " + std::to_string(cw_max) + "."};
}

bool WifiQosPlanner::finished(const std::map<std::string, DeviceView>&) const {
    return halted_;
}

std::vector<PlannedSubtask> WifiQosPlanner::plan(
    const std::vector<Instruction>&,
    const std::map<std::string, DeviceView>& devices,
    const std::set<std::string>& dispatchable, std::uint64_t round) {
    auto tunable_it = devices.find(config_.tunable_device);
    if (tunable_it == devices.end()) return {};
    const DeviceView& tunable = tunable_it->second;

    if (pending_ && tunable.resolved_id == pending_subtask_) {
        if (tunable.resolved_status == CompletionStatus::Completed) {
            const bool was_rollback = pending_target_ < index_;
            index_ = pending_target_;
            pending_ = false;
            retries_ = 0;
            const auto [cw_min, cw_max] = config_.schedule[index_];
            record_event(round, "contention window now (" +
                                    std::to_string(cw_min) + ", " +
                                    std::to_string(cw_max) + ")");
            if (was_rollback) {
                halted_ = true;
                outcome_ = Outcome::RolledBack;
                record_event(round, "halted after rollback");
            }
        } else if (retries_ < 1) {
            ++retries_;
            pending_ = false;
            record_event(round, "window change failed, re-issuing");
        } else {
            pending_ = false;
            halted_ = true;
            outcome_ = Outcome::Failed;
            record_event(round, "window change failed twice, giving up");
        }
    }
    if (halted_) return {};
    if (pending_) {
        if (dispatchable.count(config_.tunable_device) == 0) return {};
        // The device went unreported long enough to re-open; replace once.
        if (retries_ < 1) {
            ++retries_;
            record_event(round, "window change unreported, re-issuing");
            return {propose(pending_target_)};
        }
        halted_ = true;
        outcome_ = Outcome::Failed;
        record_event(round, "window change lost twice, giving up");
        return {};
    }

    // A completed step that pushed another constrained device over its
    // deadline gets undone, and the tuning stops there.
    if (index_ > 0) {
        for (const auto& [device_id, deadline] : config_.upload_deadlines) {
            if (device_id == config_.tunable_device) continue;
            auto view_it = devices.find(device_id);
            if (view_it == devices.end()) continue;
            auto upload = attribute_double(view_it->second, "upload_time_s");
            if (upload && *upload > deadline &&
                dispatchable.count(config_.tunable_device) != 0) {
                pending_target_ = index_ - 1;
                record_event(round, device_id + " deadline violated (" +
                                        seconds_text(*upload) +
                                        " s), rolling back");
                return {propose(pending_target_)};
            }
        }
    }

    auto deadline_it = config_.upload_deadlines.find(config_.tunable_device);
    if (deadline_it == config_.upload_deadlines.end()) return {};
    auto upload = attribute_double(tunable, "upload_time_s");
    if (!upload) return {};
    if (*upload <= deadline_it->second) {
        outcome_ = Outcome::Monitoring;
        return {};
    }
    if (index_ + 1 >= config_.schedule.size()) {
        halted_ = true;
        outcome_ = Outcome::FloorStillViolated;
        record_event(round, "schedule floor reached, deadline still violated");
        return {};
    }
    if (dispatchable.count(config_.tunable_device) == 0) return {};
    pending_target_ = index_ + 1;
    outcome_ = Outcome::Stepping;
    const auto [cw_min, cw_max] = config_.schedule[pending_target_];
    record_event(round, "upload " + seconds_text(*upload) +
                            " s exceeds deadline, stepping window to (" +
                            std::to_string(cw_min) + ", " +
                            std::to_string(cw_max) + ")");
    return {propose(pending_target_)};
}

void WifiQosPlanner::on_dispatched(const std::string& device_id,
                                   const SubtaskSpec& subtask) {
    if (device_id != config_.tunable_device) return;
    pending_ = true;
    pending_subtask_ = subtask.subtask_id;
}

// ---------------------------------------------------------------------------
// WifiInterferencePlanner
// ---------------------------------------------------------------------------

WifiInterferencePlanner::WifiInterferencePlanner(WifiInterferenceConfig config)
    : config_(std::move(config)) {
    if (config_.per_limit <= 0.0 || config_.per_limit >= 1.0) {
        throw Error(ErrorCode::Config, "per limit must be inside (0, 1)");
    }
    if (config_.target_band.empty()) {
        throw Error(ErrorCode::Config, "target band is empty");
    }
}

bool WifiInterferencePlanner::finished(
    const std::map<std::string, DeviceView>&) const {
    if (!triggered_) return false;
    for (const auto& [device_id, script] : scripts_) {
        if (script.phase != Phase::Done && script.phase != Phase::Failed) {
            return false;
        }
    }
    return true;
}

std::vector<PlannedSubtask> WifiInterferencePlanner::plan(
    const std::vector<Instruction>&,
    const std::map<std::string, DeviceView>& devices,
    const std::set<std::string>& dispatchable, std::uint64_t round) {
    if (!triggered_) {
        bool sensed = false;
        std::vector<std::string> violating;
        for (const auto& [device_id, view] : devices) {
            if (!view.last_report) continue;
            auto flag = view.last_report->attributes.find("interference_detected");
            if (flag != view.last_report->attributes.end() &&
                flag->second == "true") {
                sensed = true;
            }
            auto per = attribute_double(view, "per");
            if (per && *per > config_.per_limit) violating.push_back(device_id);
        }
        if (!sensed || violating.empty()) return {};
        triggered_ = true;
        for (const auto& device_id : violating) scripts_.emplace(device_id, Script{});
        record_event(round, "interference sensed, " +
                                std::to_string(violating.size()) +
                                " devices over the error limit");
    }

    std::vector<PlannedSubtask> out;
    for (auto& [device_id, script] : scripts_) {
        auto view_it = devices.find(device_id);
        if (view_it == devices.end()) continue;
        const DeviceView& view = view_it->second;

        if (script.phase == Phase::Sent &&
            view.resolved_id == script.active_subtask) {
            if (view.resolved_status == CompletionStatus::Completed) {
                script.phase = Phase::Done;
                record_event(round, device_id + " switched bands");
            } else if (script.retries < 1) {
                ++script.retries;
                script.phase = Phase::Idle;
                record_event(round, device_id + " switch failed, re-issuing");
            } else {
                script.phase = Phase::Failed;
                record_event(round, device_id + " cannot switch bands");
            }
        } else if (script.phase == Phase::Sent && view.outstanding &&
                   dispatchable.count(device_id) != 0) {
            if (script.retries < 1) {
                ++script.retries;
                script.phase = Phase::Idle;
                record_event(round, device_id + " switch unreported, re-issuing");
            } else {
                script.phase = Phase::Failed;
                record_event(round, device_id + " switch lost, giving up");
            }
        }

        if (script.phase == Phase::Idle && dispatchable.count(device_id) != 0) {
            out.push_back({device_id, "Switch the radio to the \"" +
                                          config_.target_band +
                                          "\" frequency band."});
        }
    }
    return out;
}

void WifiInterferencePlanner::on_dispatched(const std::string& device_id,
                                            const SubtaskSpec& subtask) {
    auto it = scripts_.find(device_id);
    if (it == scripts_.end()) return;
    it->second.phase = Phase::Sent;
    it->second.active_subtask = subtask.subtask_id;
}

} // namespace llmind
