#pragma once

#include "llmind/api_corpus.hpp"
#include "llmind/codegen.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace llmind {

/// The five execution states, entered strictly in declaration order.
enum class FsmState { Start, PreProcessing, FunctionCall, PostProcessing, End };

const char* fsm_state_name(FsmState state);

/// Lifecycle verdict of a subtask. Completed, NotExecutable, and Superseded
/// are terminal; Ongoing marks an in-flight run; None marks a subtask not
/// yet picked up.
enum class CompletionStatus { None, Ongoing, Completed, NotExecutable, Superseded };

const char* completion_status_name(CompletionStatus status);

/// Outcome of the one device invocation a run makes (or the failure that
/// preempted it).
struct CallResult {
    bool ok = false;
    std::string value;      // rendered device return value when ok
    std::string error_code; // error taxonomy name when not ok
    std::string detail;
};

/// Anything that can execute this device's corpus functions.
class DeviceHandle {
public:
    virtual ~DeviceHandle() = default;
    virtual std::string device_id() const = 0;
    virtual const DeviceApiProfile& profile() const = 0;
    /// Runs one corpus function; returns the rendered result, throws Error
    /// on failure.
    virtual std::string call(const std::string& function_name,
                             const std::vector<std::string>& args) = 0;
    /// Current observable state, reported upward verbatim.
    virtual std::map<std::string, std::string> attributes() const = 0;
};

/// Per-state deadlines. A state body that overruns its deadline is abandoned
/// and the run ends NotExecutable.
struct FsmTimeouts {
    std::chrono::milliseconds pre{2000};
    std::chrono::milliseconds call{30000};
    std::chrono::milliseconds post{2000};
};

/// Full trace of one run: every state entry with its timestamp, the device
/// call outcome, the human-readable log, and the terminal status.
struct ExecutionRecord {
    std::uint64_t subtask_id = 0;
    std::vector<std::pair<FsmState, std::chrono::microseconds>> state_log;
    std::optional<CallResult> call_result;
    CompletionStatus final_status = CompletionStatus::None;
    std::vector<std::string> log_lines;
};

using LogSink = std::function<void(const std::string&)>;

/// Drives the plan through Start, PreProcessing (init-role hook),
/// FunctionCall (the plan's call), PostProcessing (release-role hook plus a
/// mandatory log entry), End. PostProcessing always runs, even after a
/// failed or timed-out call; a failed PreProcessing skips the device call
/// but not the remaining states. Never throws for device failures: they are
/// captured in the record.
ExecutionRecord run_fsm(const CallPlan& plan, std::uint64_t subtask_id,
                        DeviceHandle& device, const FsmTimeouts& timeouts = {},
                        const LogSink& sink = nullptr,
                        std::atomic<CompletionStatus>* live_status = nullptr);

} // namespace llmind
