#include "llmind/fsm_executor.hpp"

#include "llmind/errors.hpp"

#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

namespace llmind {

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::microseconds now_epoch_us() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::system_clock::now().time_since_epoch());
}

// Shared between the run and a possibly-abandoned worker thread; the worker
// only ever touches this cell, never the ExecutionRecord.
struct PhaseCell {
    std::mutex mutex;
    std::condition_variable done_cv;
    bool done = false;
    bool ok = false;
    std::string value;
    std::string error_code;
    std::string detail;
};

enum class PhaseOutcome { Success, Failure, Timeout };

// Runs `body` on a worker thread and waits up to `deadline`. On timeout the
// worker is detached and its cell forgotten.
PhaseOutcome run_phase(std::chrono::milliseconds deadline,
                       const std::function<std::string()>& body, CallResult& result) {
    auto cell = std::make_shared<PhaseCell>();
    std::thread worker([cell, body] {
        std::string value, error_code, detail;
        bool ok = true;
        try {
            value = body();
        } catch (const Error& e) {
            ok = false;
            error_code = error_code_name(e.code());
            detail = e.what();
        } catch (const std::exception& e) {
            ok = false;
            error_code = error_code_name(ErrorCode::Dispatch);
            detail = e.what();
        }
        std::lock_guard<std::mutex> lock(cell->mutex);
        cell->done = true;
        cell->ok = ok;
        cell->value = std::move(value);
        cell->error_code = std::move(error_code);
        cell->detail = std::move(detail);
        cell->done_cv.notify_all();
    });

    std::unique_lock<std::mutex> lock(cell->mutex);
    const bool finished = cell->done_cv.wait_until(
        lock, Clock::now() + deadline, [&] { return cell->done; });
    if (!finished) {
        lock.unlock();
        worker.detach();
        result.ok = false;
        result.error_code = "timeout";
        result.detail = "state exceeded " + std::to_string(deadline.count()) + " ms";
        return PhaseOutcome::Timeout;
    }
    result.ok = cell->ok;
    result.value = cell->value;
    result.error_code = cell->error_code;
    result.detail = cell->detail;
    lock.unlock();
    worker.join();
    return cell->ok ? PhaseOutcome::Success : PhaseOutcome::Failure;
}

} // namespace

const char* fsm_state_name(FsmState state) {
    switch (state) {
        case FsmState::Start: return "START";
        case FsmState::PreProcessing: return "PRE_PROCESSING";
        case FsmState::FunctionCall: return "FUNCTION_CALL";
        case FsmState::PostProcessing: return "POST_PROCESSING";
        case FsmState::End: return "END";
    }
    return "START";
}

const char* completion_status_name(CompletionStatus status) {
    switch (status) {
        case CompletionStatus::None: return "none";
        case CompletionStatus::Ongoing: return "ongoing";
        case CompletionStatus::Completed: return "completed";
        case CompletionStatus::NotExecutable: return "not_executable";
        case CompletionStatus::Superseded: return "superseded";
    }
    return "none";
}

ExecutionRecord run_fsm(const CallPlan& plan, std::uint64_t subtask_id,
                        DeviceHandle& device, const FsmTimeouts& timeouts,
                        const LogSink& sink, std::atomic<CompletionStatus>* live_status) {
    ExecutionRecord record;
    record.subtask_id = subtask_id;
    if (live_status) live_status->store(CompletionStatus::Ongoing);

    auto enter = [&](FsmState state, const std::string& detail) {
        record.state_log.emplace_back(state, now_epoch_us());
        std::string line = std::to_string(now_epoch_us().count()) + " " +
                           device.device_id() + " " + std::to_string(subtask_id) + " " +
                           fsm_state_name(state) + " " + detail;
        record.log_lines.push_back(line);
        if (sink) sink(line);
    };

    bool failed = false;

    enter(FsmState::Start, "plan " + plan.rendered_call);

    const ApiFunction* init_fn = device.profile().find_role(RoleHint::Init);
    enter(FsmState::PreProcessing,
          init_fn ? "invoking " + init_fn->name : "no init hook");
    if (init_fn) {
        CallResult pre;
        const auto outcome = run_phase(
            timeouts.pre, [&] { return device.call(init_fn->name, {}); }, pre);
        if (outcome != PhaseOutcome::Success) {
            failed = true;
            record.call_result = pre;
        }
    }

    if (!failed) {
        enter(FsmState::FunctionCall, "calling " + plan.rendered_call);
        std::vector<std::string> arg_values;
        arg_values.reserve(plan.args.bindings.size());
        for (const auto& [name, value] : plan.args.bindings) arg_values.push_back(value);
        CallResult call;
        const auto outcome = run_phase(
            timeouts.call,
            [&] { return device.call(plan.function.name, arg_values); }, call);
        record.call_result = call;
        failed = outcome != PhaseOutcome::Success;
    } else {
        enter(FsmState::FunctionCall, "skipped after pre-processing failure");
    }

    const ApiFunction* release_fn = device.profile().find_role(RoleHint::Release);
    enter(FsmState::PostProcessing,
          (release_fn ? "invoking " + release_fn->name + "; " : std::string()) +
              "result " +
              (record.call_result
                   ? (record.call_result->ok ? record.call_result->value
                                             : record.call_result->error_code + " " +
                                                   record.call_result->detail)
                   : std::string("none")));
    if (release_fn) {
        CallResult post;
        const auto outcome = run_phase(
            timeouts.post, [&] { return device.call(release_fn->name, {}); }, post);
        if (outcome != PhaseOutcome::Success) failed = true;
    }

    record.final_status =
        failed ? CompletionStatus::NotExecutable : CompletionStatus::Completed;
    enter(FsmState::End, completion_status_name(record.final_status));
    if (live_status) live_status->store(record.final_status);
    return record;
}

} // namespace llmind
