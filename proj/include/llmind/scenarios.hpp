#pragma once

#include "llmind/coordinator.hpp"
#include "llmind/planners.hpp"
#include "llmind/sim_devices.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace llmind {

struct TimelineEntry {
    double sim_time_s = 0.0;
    std::string event;

    bool operator==(const TimelineEntry&) const = default;
};

/// Everything a scenario run leaves behind: a narrated timeline on the
/// scenario's own clock, schema-stable CSV rows, the machine-to-machine log,
/// and the outcome of the scenario's built-in checks.
struct ScenarioResult {
    std::string scenario_id;
    std::vector<TimelineEntry> timeline; // monotone in sim_time_s
    std::vector<std::string> metrics_header;
    std::vector<std::vector<std::string>> metrics_rows;
    std::vector<std::string> m2m_lines;
    std::vector<std::string> check_failures;

    bool checks_passed() const { return check_failures.empty(); }
};

/// Writes metrics.csv, timeline.json, and m2m.log into `directory` (created
/// if missing) and returns the directory path.
std::string write_scenario_outputs(const ScenarioResult& result,
                                   const std::string& directory);

/// Language-model stand-in used by the benchmark runs: fixed latency per
/// call plus a seeded Bernoulli failure.
struct StubLlmConfig {
    std::chrono::milliseconds latency{0};
    double failure_p = 0.0;
};

enum class WarehouseMode { Distributed, Centralized };

const char* warehouse_mode_name(WarehouseMode mode);

struct WarehouseRunConfig {
    int n_robots = 4; // one shelf per robot
    WarehouseMode mode = WarehouseMode::Distributed;
    StubLlmConfig stub;
    int trials = 1;
    std::uint64_t seed = 1;
    std::chrono::milliseconds poll_period{25};
    std::chrono::milliseconds report_timeout{12};
    int max_rounds = 80; // per-trial round budget
};

/// Shelf-vacancy benchmark. Distributed mode drives a coordinator, one agent
/// per robot, and a shared world until every shelf's vacancy is reported;
/// centralized mode runs the serial plan-then-generate baseline. Metrics
/// carry one row per trial; the timeline and M2M log narrate trial 0.
/// Measured-duration columns (suffix _ms) vary run to run; all other columns
/// are reproducible bit-exactly for a fixed seed.
ScenarioResult run_warehouse(const WarehouseRunConfig& config);

struct WifiScenarioConfig {
    std::string config_path; // empty = the shipped scenario config
    std::chrono::milliseconds poll_period{40};
    std::chrono::milliseconds report_timeout{20};
    int max_rounds = 25;
    // Truncates the contention-window schedule to its first N entries, to
    // demonstrate honest non-convergence when the floor is too high.
    std::optional<std::size_t> schedule_floor;
    // Tightens one device's upload deadline mid-run (device, seconds, round),
    // to demonstrate the rollback path.
    std::optional<std::pair<std::string, double>> inject_deadline;
    int inject_round = 0;
};

/// Quality-of-service scenario: one client uploads alone and meets its
/// deadline; a second client joins and pushes it over; the planner walks the
/// tunable client's contention window down the schedule until both clients
/// meet their deadlines again. The harness advances the simulated clock one
/// tick per coordinator round.
ScenarioResult run_wifi_scenario1(const WifiScenarioConfig& config = {});

/// Interference scenario: a 2.4 GHz interference source switches on, both
/// clients' packet error rates exceed the budget, and the sensing client's
/// report triggers band-switch subtasks. The client that can retune moves to
/// 5 GHz; the one that cannot reports the subtask as not executable and
/// recovers only when the source switches off.
ScenarioResult run_wifi_scenario2(const WifiScenarioConfig& config = {});

struct InstructRunConfig {
    std::string text;
    int n_robots = 2;
    std::uint64_t seed = 21;
    std::chrono::milliseconds poll_period{25};
    std::chrono::milliseconds report_timeout{12};
    int max_rounds = 30;
    std::ostream* echo = nullptr; // live round-by-round trace target
};

/// Submits one ad-hoc instruction to an embedded warehouse system and traces
/// the rounds until the plan completes or the round budget expires (the
/// trace then ends with a warning).
ScenarioResult run_instruct(const InstructRunConfig& config);

} // namespace llmind
