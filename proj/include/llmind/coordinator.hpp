#pragma once

#include "llmind/codegen.hpp"
#include "llmind/report.hpp"
#include "llmind/transport.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace llmind {

struct Instruction {
    std::uint64_t instruction_id = 0;
    std::string text;
    std::chrono::system_clock::time_point received_ts{};
};

/// The coordinator's knowledge of one device, refreshed from reports. Late
/// reports (after a round's deadline) still refresh the snapshot; they are
/// only excluded from that round's received set.
struct DeviceView {
    std::string device_id;
    bool reachable = true;
    std::uint64_t last_report_round = 0;
    std::optional<DeviceReport> last_report;
    std::optional<DeviceApiProfile> profile;

    // The last dispatched subtask until a report names it with a terminal
    // status; then it moves into the resolved_* fields. outstanding_round is
    // the last round with evidence of progress (dispatch, or an Ongoing
    // report naming the subtask); the re-issue window counts from it.
    std::optional<SubtaskSpec> outstanding;
    std::uint64_t outstanding_round = 0;
    std::uint64_t outstanding_correlation = 0;
    bool acked = false;

    std::optional<std::uint64_t> resolved_id;
    CompletionStatus resolved_status = CompletionStatus::None;
    std::optional<std::string> resolved_result;
};

/// Numeric attribute from the device's latest report, if present and parseable.
std::optional<double> attribute_double(const DeviceView& view, const std::string& key);

struct PlannedSubtask {
    std::string device_id;
    std::string text;
};

/// Decomposes instructions and reports into the next round's subtasks.
/// plan() must propose at most one subtask per device, and only for devices
/// in the dispatchable set; violations are dropped by the coordinator.
class Planner {
public:
    virtual ~Planner() = default;
    virtual std::string planner_id() const = 0;
    virtual std::vector<PlannedSubtask> plan(
        const std::vector<Instruction>& instructions,
        const std::map<std::string, DeviceView>& devices,
        const std::set<std::string>& dispatchable, std::uint64_t round) = 0;
    /// Called once per subtask the coordinator actually sent, with the
    /// assigned id, so the planner can track resolution.
    virtual void on_dispatched(const std::string& device_id,
                               const SubtaskSpec& subtask);
    /// True when the planner has nothing further to dispatch, ever.
    virtual bool finished(const std::map<std::string, DeviceView>& devices) const;

    /// Narrated planning decisions (round, text), drained by the harness.
    std::vector<std::pair<std::uint64_t, std::string>> drain_events();

protected:
    void record_event(std::uint64_t round, std::string text);

private:
    std::vector<std::pair<std::uint64_t, std::string>> events_;
};

/// Never dispatches anything; keeps the round loop exercising poll/report.
class IdlePlanner final : public Planner {
public:
    std::string planner_id() const override { return "idle"; }
    std::vector<PlannedSubtask> plan(const std::vector<Instruction>&,
                                     const std::map<std::string, DeviceView>&,
                                     const std::set<std::string>&,
                                     std::uint64_t) override {
        return {};
    }
};

struct CoordinatorConfig {
    std::chrono::milliseconds poll_period{1000};
    std::chrono::milliseconds report_timeout{500};
    // Rounds an outstanding subtask may stay unreported before the device
    // becomes dispatchable again (deliberate supersede of a lost subtask).
    int reissue_rounds = 3;
};

struct RoundSummary {
    std::uint64_t round = 0;
    std::set<std::string> polled;
    std::map<std::string, DeviceReport> received;
    std::vector<SubtaskSpec> dispatched;
    std::chrono::milliseconds elapsed{0};
    bool deadline_hit = false;
};

/// The central loop: poll every agent, gather reports until all arrive or
/// the deadline passes, fold reports into device views, ask the planner for
/// new subtasks, and dispatch them under the one-outstanding-per-device
/// discipline. run_round() is single-owner; submit_instruction() may be
/// called from any thread.
class Coordinator {
public:
    Coordinator(MessageBus& bus, std::shared_ptr<Inbox> inbox,
                CoordinatorConfig config, std::shared_ptr<Planner> planner,
                LogSink log = nullptr, std::string coordinator_id = "coordinator");

    void register_agent(const std::string& device_id);
    std::uint64_t submit_instruction(const std::string& text);
    std::size_t pending_instructions() const;

    RoundSummary run_round();
    /// Runs rounds at poll_period cadence until the planner reports finished
    /// or the budget is spent; returns the number of rounds run.
    int run_until_finished(int max_rounds);

    std::uint64_t round() const { return round_; }
    const std::map<std::string, DeviceView>& device_views() const { return views_; }
    Planner& planner() { return *planner_; }
    const std::vector<RoundSummary>& round_log() const { return round_log_; }

private:
    void absorb(const WireMessage& message, bool on_time, RoundSummary& summary,
                std::set<std::string>& awaited);
    std::set<std::string> compute_dispatchable() const;
    std::vector<Instruction> drain_instructions();
    void log_line(const std::string& text);

    MessageBus* bus_;
    std::shared_ptr<Inbox> inbox_;
    CoordinatorConfig config_;
    std::shared_ptr<Planner> planner_;
    LogSink log_;
    std::string id_;

    std::uint64_t round_ = 0;
    std::uint64_t next_subtask_id_ = 1;
    std::uint64_t next_correlation_ = 1;
    std::map<std::string, DeviceView> views_;
    std::vector<RoundSummary> round_log_;

    mutable std::mutex instruction_mutex_;
    std::deque<Instruction> instructions_;
    std::uint64_t next_instruction_id_ = 1;
};

/// Deterministic stand-in for a language-model call: fixed latency plus a
/// seeded per-call failure draw.
class StubLlm {
public:
    StubLlm(std::chrono::milliseconds latency, double failure_p, std::uint64_t seed);
    /// Sleeps for the latency, draws, and returns whether the call succeeded.
    bool call();
    int calls() const { return calls_; }
    int failures() const { return failures_; }

private:
    std::chrono::milliseconds latency_;
    double failure_p_;
    std::uint64_t state_;
    int calls_ = 0;
    int failures_ = 0;
};

struct CentralizedResult {
    std::chrono::milliseconds wall_time{0};
    bool success = true;
    int devices = 0;
    int failed_calls = 0;
};

/// The serial baseline: for each device in turn, one planning call then one
/// code-generation call against the stub. Failures are injected on the
/// code-generation call only; a failed device is recorded and the run
/// continues.
CentralizedResult run_centralized_baseline(int n_devices,
                                           std::chrono::milliseconds call_latency,
                                           double codegen_failure_p,
                                           std::uint64_t seed);

/// Extractor decorator modeling a remote code-generation call: fixed
/// latency, seeded per-call failure (raising provider-unavailable), and a
/// record of every call's wall-clock interval so a harness can measure how
/// much the calls overlapped across agents.
class StubLatencyExtractor final : public ArgumentExtractor {
public:
    struct Interval {
        std::chrono::steady_clock::time_point start;
        std::chrono::steady_clock::time_point end;
        bool ok = false;
    };

    StubLatencyExtractor(const ArgumentExtractor& inner,
                         std::chrono::milliseconds latency, double failure_p,
                         std::uint64_t seed);
    std::string extractor_id() const override;
    std::vector<std::string> extract(const std::string& text,
                                     const ApiFunction& function) const override;

    std::vector<Interval> intervals() const;
    int attempts() const;
    int failures() const;

private:
    const ArgumentExtractor* inner_;
    std::chrono::milliseconds latency_;
    double failure_p_;
    mutable std::mutex mutex_;
    mutable std::uint64_t state_;
    mutable std::vector<Interval> intervals_;
};

/// max(end) - min(start) over the intervals; zero when empty.
std::chrono::milliseconds interval_union_span(
    const std::vector<StubLatencyExtractor::Interval>& intervals);

} // namespace llmind
