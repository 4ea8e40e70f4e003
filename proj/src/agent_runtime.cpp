#include "llmind/agent_runtime.hpp"

#include "llmind/errors.hpp"

#include <chrono>
#include <utility>

namespace llmind {

std::optional<SubtaskSpec> SingleSlotQueue::store(SubtaskSpec subtask) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::optional<SubtaskSpec> superseded = std::move(slot_);
    slot_ = std::move(subtask);
    if (superseded) ++dropped_;
    return superseded;
}

std::optional<SubtaskSpec> SingleSlotQueue::take() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::optional<SubtaskSpec> taken = std::move(slot_);
    slot_.reset();
    return taken;
}

bool SingleSlotQueue::empty() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return !slot_.has_value();
}

int SingleSlotQueue::dropped_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return dropped_;
}

AgentRuntime::AgentRuntime(DeviceHandle& device,
                           std::shared_ptr<const EmbeddingProvider> provider,
                           const ArgumentExtractor& extractor, AgentConfig config,
                           LogSink fsm_sink)
    : device_(&device), provider_(std::move(provider)), extractor_(&extractor),
      config_(std::move(config)), fsm_sink_(std::move(fsm_sink)) {
    if (config_.device_id != device_->device_id()) {
        throw Error(ErrorCode::Identity,
                    "agent configured for '" + config_.device_id +
                        "' but the device is '" + device_->device_id() + "'");
    }
    std::string path = config_.template_path.empty()
                           ? std::string(LLMIND_REPO_ROOT) +
                                 "/templates/five_state_fsm.txt"
                           : config_.template_path;
    template_ = load_template_file(path);
    ensure_index();
    attributes_snapshot_ = device_->attributes();
}

AgentRuntime::~AgentRuntime() { stop(); }

void AgentRuntime::ensure_index() {
    std::uint64_t version = device_->profile().version;
    if (!index_ || indexed_version_ != version) {
        index_.emplace(build_index(provider_, device_->profile()));
        indexed_version_ = version;
    }
}

DeviceReport AgentRuntime::handle_poll() {
    std::lock_guard<std::mutex> lock(state_mutex_);
    DeviceReport report;
    report.device_id = config_.device_id;
    report.status = fault_latched_ ? DeviceStatus::Fault : DeviceStatus::Ok;
    fault_latched_ = false;
    report.attributes = attributes_snapshot_;
    report.attributes["dropped_subtasks"] = std::to_string(queue_.dropped_count());
    if (latest_assigned_) {
        report.subtask_status = {{*latest_assigned_,
                                  statuses_.at(*latest_assigned_)}};
        if (latest_result_ && latest_result_->first == *latest_assigned_) {
            report.subtask_result = latest_result_->second;
        }
    }
    const auto& profile = device_->profile();
    if (profile.version > announced_profile_version_) {
        report.profile_update = profile;
        announced_profile_version_ = profile.version;
    }
    return report;
}

void AgentRuntime::handle_assign(const SubtaskSpec& subtask) {
    if (subtask.device_id != config_.device_id) {
        {
            std::lock_guard<std::mutex> lock(state_mutex_);
            fault_latched_ = true;
        }
        throw Error(ErrorCode::Addressing,
                    "subtask " + std::to_string(subtask.subtask_id) + " names '" +
                        subtask.device_id + "', this agent is '" +
                        config_.device_id + "'");
    }
    std::lock_guard<std::mutex> lock(state_mutex_);
    statuses_[subtask.subtask_id] = CompletionStatus::None;
    latest_assigned_ = subtask.subtask_id;
    if (auto superseded = queue_.store(subtask)) {
        statuses_[superseded->subtask_id] = CompletionStatus::Superseded;
    }
}

std::optional<ExecutionRecord> AgentRuntime::interpret_loop_step() {
    bool expected = false;
    if (!executing_.compare_exchange_strong(expected, true)) return std::nullopt;
    auto subtask = queue_.take();
    if (!subtask) {
        executing_ = false;
        return std::nullopt;
    }
    {
        std::lock_guard<std::mutex> lock(state_mutex_);
        statuses_[subtask->subtask_id] = CompletionStatus::Ongoing;
    }
    ExecutionRecord record = execute(*subtask);
    {
        std::lock_guard<std::mutex> lock(state_mutex_);
        statuses_[subtask->subtask_id] = record.final_status;
        if (record.final_status == CompletionStatus::Completed &&
            record.call_result && record.call_result->ok) {
            latest_result_ = {subtask->subtask_id, record.call_result->value};
        }
        history_.push_back(record);
        while (history_.size() > config_.history_limit) history_.pop_front();
        attributes_snapshot_ = device_->attributes();
    }
    executing_ = false;
    return record;
}

ExecutionRecord AgentRuntime::execute(const SubtaskSpec& subtask) {
    try {
        ensure_index();
        auto match = match_subtask(*index_, subtask.text);
        const ApiFunction& function = match->function;
        ArgumentSet args = extract_arguments(subtask.text, function, *extractor_);
        CallPlan plan = compose_call(function, args);
        render_program(template_, plan);
        return run_fsm(plan, subtask.subtask_id, *device_, config_.timeouts,
                       fsm_sink_);
    } catch (const Error& e) {
        ExecutionRecord record;
        record.subtask_id = subtask.subtask_id;
        record.final_status = CompletionStatus::NotExecutable;
        CallResult failure;
        failure.ok = false;
        failure.error_code = error_code_name(e.code());
        failure.detail = e.what();
        record.call_result = failure;
        std::string line = config_.device_id + " " +
                           std::to_string(subtask.subtask_id) +
                           " interpretation failed: " + e.what();
        record.log_lines.push_back(line);
        if (fsm_sink_) fsm_sink_(line);
        return record;
    }
}

void AgentRuntime::refresh_attributes() {
    auto snapshot = device_->attributes();
    std::lock_guard<std::mutex> lock(state_mutex_);
    attributes_snapshot_ = std::move(snapshot);
}

void AgentRuntime::start(MessageBus& bus, const std::string& coordinator_id,
                         std::shared_ptr<Inbox> inbox) {
    if (running_) return;
    bus_ = &bus;
    coordinator_id_ = coordinator_id;
    inbox_ = std::move(inbox);
    running_ = true;
    message_thread_ = std::thread([this] { message_loop(); });
    interpreter_thread_ = std::thread([this] { interpreter_loop(); });
}

void AgentRuntime::stop() {
    if (!running_.exchange(false)) return;
    if (message_thread_.joinable()) message_thread_.join();
    if (interpreter_thread_.joinable()) interpreter_thread_.join();
}

void AgentRuntime::message_loop() {
    while (running_) {
        auto message = inbox_->pop(std::chrono::milliseconds(20));
        if (!message) continue;
        switch (message->type) {
            case MessageType::Poll: {
                auto report = handle_poll();
                bus_->send(config_.device_id, coordinator_id_,
                           make_report(message->round, message->correlation_id,
                                       std::move(report)));
                break;
            }
            case MessageType::Assign: {
                if (!message->subtask) break;
                try {
                    handle_assign(*message->subtask);
                    bus_->send(config_.device_id, coordinator_id_,
                               make_ack(message->correlation_id,
                                        config_.device_id));
                } catch (const Error&) {
                    // Fault latched; the next report carries it.
                }
                break;
            }
            case MessageType::Report:
            case MessageType::Ack:
                break; // agents never consume these
        }
    }
}

void AgentRuntime::interpreter_loop() {
    while (running_) {
        auto record = interpret_loop_step();
        if (!record) {
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
    }
}

int AgentRuntime::dropped_count() const { return queue_.dropped_count(); }

CompletionStatus AgentRuntime::status_of(std::uint64_t subtask_id) const {
    std::lock_guard<std::mutex> lock(state_mutex_);
    auto it = statuses_.find(subtask_id);
    return it == statuses_.end() ? CompletionStatus::None : it->second;
}

std::optional<std::pair<std::uint64_t, CompletionStatus>>
AgentRuntime::latest_status() const {
    std::lock_guard<std::mutex> lock(state_mutex_);
    if (!latest_assigned_) return std::nullopt;
    return std::make_pair(*latest_assigned_, statuses_.at(*latest_assigned_));
}

std::vector<ExecutionRecord> AgentRuntime::history() const {
    std::lock_guard<std::mutex> lock(state_mutex_);
    return {history_.begin(), history_.end()};
}

} // namespace llmind
