#pragma once

#include "llmind/coordinator.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace llmind {

/// Scripted decomposition of a shelf-vacancy instruction: every robot_k gets
/// "Move to shelf k." and, once that completes, "Identify the vacancy in
/// shelf k."; the identify result is collected per shelf. A NotExecutable or
/// lost step is re-issued once, then the robot's script is marked failed.
class WarehousePlanner final : public Planner {
public:
    enum class Phase { Idle, MoveSent, MoveDone, IdentifySent, Done, Failed };
    struct Script {
        int shelf = 0;
        Phase phase = Phase::Idle;
        int retries = 0;
        std::uint64_t active_subtask = 0;
        std::optional<std::string> vacancy;
    };

    std::string planner_id() const override { return "warehouse"; }
    std::vector<PlannedSubtask> plan(const std::vector<Instruction>& instructions,
                                     const std::map<std::string, DeviceView>& devices,
                                     const std::set<std::string>& dispatchable,
                                     std::uint64_t round) override;
    void on_dispatched(const std::string& device_id,
                       const SubtaskSpec& subtask) override;
    bool finished(const std::map<std::string, DeviceView>& devices) const override;

    bool active() const { return active_; }
    bool all_succeeded() const;
    const std::map<std::string, Script>& scripts() const { return scripts_; }
    /// Shelf number -> identify result, for completed scripts.
    std::map<int, std::string> vacancy_results() const;

    static bool triggers(const std::string& instruction_text);

private:
    bool all_terminal() const;

    bool active_ = false;
    std::map<std::string, Script> scripts_;
};

struct WifiQosConfig {
    std::string tunable_device;
    std::map<std::string, double> upload_deadlines; // device -> seconds
    std::vector<std::pair<int, int>> schedule{
        {10, 15}, {8, 12}, {6, 9}, {4, 6}, {2, 4}};
};

/// Steps the tunable client's contention window down the schedule while its
/// upload time misses the deadline; rolls back one step and halts if another
/// constrained device starts missing its own deadline; reports honestly when
/// the schedule floor is reached while still violated.
class WifiQosPlanner final : public Planner {
public:
    enum class Outcome { Monitoring, Stepping, RolledBack, FloorStillViolated, Failed };

    explicit WifiQosPlanner(WifiQosConfig config);

    std::string planner_id() const override { return "wifi-qos"; }
    std::vector<PlannedSubtask> plan(const std::vector<Instruction>& instructions,
                                     const std::map<std::string, DeviceView>& devices,
                                     const std::set<std::string>& dispatchable,
                                     std::uint64_t round) override;
    void on_dispatched(const std::string& device_id,
                       const SubtaskSpec& subtask) override;
    bool finished(const std::map<std::string, DeviceView>& devices) const override;

    Outcome outcome() const { return outcome_; }
    std::size_t schedule_index() const { return index_; }
    std::pair<int, int> current_cw() const { return config_.schedule[index_]; }
    bool halted() const { return halted_; }
    /// Requirement injection point for the rollback path.
    void set_deadline(const std::string& device_id, double seconds);

private:
    PlannedSubtask propose(std::size_t target) const;

    WifiQosConfig config_;
    std::size_t index_ = 0;
    std::size_t pending_target_ = 0;
    bool pending_ = false;
    std::uint64_t pending_subtask_ = 0;
    int retries_ = 0;
    bool halted_ = false;
    Outcome outcome_ = Outcome::Monitoring;
};

struct WifiInterferenceConfig {
    double per_limit = 0.20;
    std::string target_band = "band_5";
};

/// One-shot mitigation: once some device senses interference while packet
/// error rates exceed the limit, every violating device is told to switch
/// bands. Devices that cannot switch fail their script (after one retry).
class WifiInterferencePlanner final : public Planner {
public:
    enum class Phase { Idle, Sent, Done, Failed };
    struct Script {
        Phase phase = Phase::Idle;
        int retries = 0;
        std::uint64_t active_subtask = 0;
    };

    explicit WifiInterferencePlanner(WifiInterferenceConfig config);

    std::string planner_id() const override { return "wifi-interference"; }
    std::vector<PlannedSubtask> plan(const std::vector<Instruction>& instructions,
                                     const std::map<std::string, DeviceView>& devices,
                                     const std::set<std::string>& dispatchable,
                                     std::uint64_t round) override;
    void on_dispatched(const std::string& device_id,
                       const SubtaskSpec& subtask) override;
    bool finished(const std::map<std::string, DeviceView>& devices) const override;

    bool triggered() const { return triggered_; }
    const std::map<std::string, Script>& scripts() const { return scripts_; }

private:
    WifiInterferenceConfig config_;
    bool triggered_ = false;
    std::map<std::string, Script> scripts_;
};

} // namespace llmind
