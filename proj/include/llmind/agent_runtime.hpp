#pragma once

#include "llmind/codegen.hpp"
#include "llmind/fsm_executor.hpp"
#include "llmind/rag_matcher.hpp"
#include "llmind/report.hpp"
#include "llmind/transport.hpp"

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace llmind {

/// Pending-work slot holding at most one subtask. Storing over an occupant
/// supersedes it: the occupant is returned and the drop counter moves.
/// A subtask that already left the slot for execution is out of reach.
class SingleSlotQueue {
public:
    std::optional<SubtaskSpec> store(SubtaskSpec subtask);
    std::optional<SubtaskSpec> take();
    bool empty() const;
    int dropped_count() const;

private:
    mutable std::mutex mutex_;
    std::optional<SubtaskSpec> slot_;
    int dropped_ = 0;
};

struct AgentConfig {
    std::string device_id;
    FsmTimeouts timeouts{};
    std::size_t history_limit = 1024;
    std::string template_path; // empty selects the shipped five-state template
};

/// The device-side runtime: answers polls from in-memory snapshots (never
/// touching the device), accepts subtask assignments into the single slot,
/// and interprets one subtask at a time through match -> extract -> compose
/// -> render -> execute. Use the synchronous handlers directly, or start()
/// to run the message loop and interpreter as threads over a MessageBus.
class AgentRuntime {
public:
    /// The device outlives the runtime. Attribute snapshots are taken at
    /// construction and after each execution, so polls stay responsive while
    /// a device call is in flight.
    AgentRuntime(DeviceHandle& device,
                 std::shared_ptr<const EmbeddingProvider> provider,
                 const ArgumentExtractor& extractor, AgentConfig config,
                 LogSink fsm_sink = nullptr);
    ~AgentRuntime();

    AgentRuntime(const AgentRuntime&) = delete;
    AgentRuntime& operator=(const AgentRuntime&) = delete;

    /// Report assembled from current snapshots. The device's profile rides
    /// along exactly once per version; an addressing fault latched since the
    /// last poll turns status to Fault for this one report.
    DeviceReport handle_poll();

    /// Stores the subtask (superseding any slot occupant). Throws an
    /// addressing error and latches a fault when the subtask names another
    /// device.
    void handle_assign(const SubtaskSpec& subtask);

    /// Pops and executes one subtask; returns nothing when the slot is empty
    /// or an execution is already running. Interpretation failures (match,
    /// extraction, composition) terminate the subtask NotExecutable without
    /// reaching the device.
    std::optional<ExecutionRecord> interpret_loop_step();

    /// Re-snapshots device attributes. Call from the device world's owner
    /// after out-of-band state changes; never called concurrently with a
    /// device call.
    void refresh_attributes();

    /// Spawns the message loop (polls and assignments from `inbox`, replies
    /// toward `coordinator_id` on `bus`) and the interpreter loop.
    void start(MessageBus& bus, const std::string& coordinator_id,
               std::shared_ptr<Inbox> inbox);
    void stop();

    const std::string& device_id() const { return config_.device_id; }
    int dropped_count() const;
    CompletionStatus status_of(std::uint64_t subtask_id) const;
    std::optional<std::pair<std::uint64_t, CompletionStatus>> latest_status() const;
    std::vector<ExecutionRecord> history() const;

private:
    void ensure_index();
    ExecutionRecord execute(const SubtaskSpec& subtask);
    void message_loop();
    void interpreter_loop();

    DeviceHandle* device_;
    std::shared_ptr<const EmbeddingProvider> provider_;
    const ArgumentExtractor* extractor_;
    AgentConfig config_;
    LogSink fsm_sink_;
    CodeTemplate template_;

    std::optional<ApiIndex> index_;
    std::uint64_t indexed_version_ = 0;

    SingleSlotQueue queue_;
    std::atomic<bool> executing_{false};

    mutable std::mutex state_mutex_;
    std::map<std::string, std::string> attributes_snapshot_;
    std::map<std::uint64_t, CompletionStatus> statuses_;
    std::optional<std::uint64_t> latest_assigned_;
    std::optional<std::pair<std::uint64_t, std::string>> latest_result_;
    std::deque<ExecutionRecord> history_;
    std::uint64_t announced_profile_version_ = 0;
    bool fault_latched_ = false;

    std::atomic<bool> running_{false};
    MessageBus* bus_ = nullptr;
    std::string coordinator_id_;
    std::shared_ptr<Inbox> inbox_;
    std::thread message_thread_;
    std::thread interpreter_thread_;
};

} // namespace llmind
