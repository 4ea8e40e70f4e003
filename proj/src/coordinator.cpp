#include "llmind/coordinator.hpp"

#include "llmind/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace llmind {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Advances the state and maps the draw to [0, 1).
double unit_draw(std::uint64_t& state) {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * (1.0 / 9007199254740992.0);
}

bool is_terminal(CompletionStatus status) {
    return status == CompletionStatus::Completed ||
           status == CompletionStatus::NotExecutable ||
           status == CompletionStatus::Superseded;
}

} // namespace

std::optional<double> attribute_double(const DeviceView& view,
                                       const std::string& key) {
    if (!view.last_report) return std::nullopt;
    auto it = view.last_report->attributes.find(key);
    if (it == view.last_report->attributes.end()) return std::nullopt;
    const char* text = it->second.c_str();
    char* end = nullptr;
    double value = std::strtod(text, &end);
    if (end == text) return std::nullopt;
    return value;
}

void Planner::on_dispatched(const std::string&, const SubtaskSpec&) {}

bool Planner::finished(const std::map<std::string, DeviceView>&) const {
    return false;
}

std::vector<std::pair<std::uint64_t, std::string>> Planner::drain_events() {
    auto out = std::move(events_);
    events_.clear();
    return out;
}

void Planner::record_event(std::uint64_t round, std::string text) {
    events_.emplace_back(round, std::move(text));
}

Coordinator::Coordinator(MessageBus& bus, std::shared_ptr<Inbox> inbox,
                         CoordinatorConfig config, std::shared_ptr<Planner> planner,
                         LogSink log, std::string coordinator_id)
    : bus_(&bus),
      inbox_(std::move(inbox)),
      config_(config),
      planner_(std::move(planner)),
      log_(std::move(log)),
      id_(std::move(coordinator_id)) {
    if (!inbox_) throw Error(ErrorCode::Config, "coordinator needs an inbox");
    if (!planner_) throw Error(ErrorCode::Config, "coordinator needs a planner");
    if (config_.report_timeout >= config_.poll_period) {
        throw Error(ErrorCode::Validation,
                    "report_timeout must be shorter than poll_period");
    }
    if (config_.reissue_rounds < 1) {
        throw Error(ErrorCode::Validation, "reissue_rounds must be at least 1");
    }
}

void Coordinator::register_agent(const std::string& device_id) {
    if (device_id.empty()) {
        throw Error(ErrorCode::Validation, "device id is empty");
    }
    DeviceView view;
    view.device_id = device_id;
    views_.emplace(device_id, std::move(view));
}

std::uint64_t Coordinator::submit_instruction(const std::string& text) {
    if (text.empty()) {
        throw Error(ErrorCode::Validation, "instruction text is empty");
    }
    std::lock_guard<std::mutex> lock(instruction_mutex_);
    Instruction instruction{next_instruction_id_++, text,
                            std::chrono::system_clock::now()};
    instructions_.push_back(instruction);
    return instruction.instruction_id;
}

std::size_t Coordinator::pending_instructions() const {
    std::lock_guard<std::mutex> lock(instruction_mutex_);
    return instructions_.size();
}

std::vector<Instruction> Coordinator::drain_instructions() {
    std::lock_guard<std::mutex> lock(instruction_mutex_);
    std::vector<Instruction> out(instructions_.begin(), instructions_.end());
    instructions_.clear();
    return out;
}

void Coordinator::log_line(const std::string& text) {
    if (log_) log_(text);
}

void Coordinator::absorb(const WireMessage& message, bool on_time,
                         RoundSummary& summary, std::set<std::string>& awaited) {
    if (message.type == MessageType::Ack) {
        auto it = views_.find(message.device_id);
        if (it != views_.end() &&
            message.correlation_id == it->second.outstanding_correlation) {
            it->second.acked = true;
        }
        return;
    }
    if (message.type != MessageType::Report || !message.report) return;
    const DeviceReport& report = *message.report;
    auto it = views_.find(report.device_id);
    if (it == views_.end()) {
        log_line("ignored report from unregistered device " + report.device_id);
        return;
    }
    DeviceView& view = it->second;
    view.last_report = report;
    view.last_report_round = std::max(view.last_report_round, message.round);
    if (report.profile_update) view.profile = report.profile_update;
    if (report.subtask_status && view.outstanding &&
        report.subtask_status->first == view.outstanding->subtask_id &&
        report.subtask_status->second == CompletionStatus::Ongoing) {
        // Liveness evidence: the device is executing, so the re-issue clock
        // restarts; only a genuinely unreported subtask goes stale.
        view.outstanding_round = round_;
    }
    if (report.subtask_status && view.outstanding &&
        report.subtask_status->first == view.outstanding->subtask_id &&
        is_terminal(report.subtask_status->second)) {
        view.resolved_id = report.subtask_status->first;
        view.resolved_status = report.subtask_status->second;
        view.resolved_result =
            view.resolved_status == CompletionStatus::Completed
                ? report.subtask_result
                : std::nullopt;
        view.outstanding.reset();
    }
    if (on_time && message.round == summary.round) {
        summary.received[report.device_id] = report;
        awaited.erase(report.device_id);
    }
}

std::set<std::string> Coordinator::compute_dispatchable() const {
    std::set<std::string> out;
    for (const auto& [device_id, view] : views_) {
        if (!view.outstanding) {
            out.insert(device_id);
        } else if (round_ - view.outstanding_round >=
                   static_cast<std::uint64_t>(config_.reissue_rounds)) {
            // Unreported long enough; a replacement supersede is deliberate.
            out.insert(device_id);
        }
    }
    return out;
}

RoundSummary Coordinator::run_round() {
    const auto start = std::chrono::steady_clock::now();
    RoundSummary summary;
    summary.round = ++round_;

    std::set<std::string> awaited;
    for (auto& [device_id, view] : views_) {
        summary.polled.insert(device_id);
        view.reachable = bus_->send(id_, device_id,
                                    make_poll(round_, next_correlation_++));
        // An unreachable device is silent this round; never awaited.
        if (view.reachable) awaited.insert(device_id);
    }

    const auto deadline = start + config_.report_timeout;
    while (!awaited.empty()) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            summary.deadline_hit = true;
            break;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                             deadline - now) +
                         std::chrono::milliseconds(1);
        auto message = inbox_->pop(remaining);
        if (!message) continue; // loop re-checks the deadline
        absorb(*message, true, summary, awaited);
    }
    // Off-round stragglers refresh snapshots without joining this round.
    while (auto message = inbox_->try_pop()) {
        absorb(*message, false, summary, awaited);
    }

    auto instructions = drain_instructions();
    auto dispatchable = compute_dispatchable();
    std::vector<PlannedSubtask> proposals;
    try {
        proposals = planner_->plan(instructions, views_, dispatchable, round_);
    } catch (const Error& e) {
        // Planner trouble costs one round, never the loop.
        log_line(std::string("planner error: ") + e.what());
        proposals.clear();
    }
    for (const auto& proposal : proposals) {
        auto it = views_.find(proposal.device_id);
        if (it == views_.end() || dispatchable.count(proposal.device_id) == 0) {
            log_line("dropped subtask for non-dispatchable device " +
                     proposal.device_id);
            continue;
        }
        SubtaskSpec spec{next_subtask_id_++, proposal.device_id, proposal.text,
                         round_};
        const std::uint64_t correlation = next_correlation_++;
        if (!bus_->send(id_, proposal.device_id, make_assign(correlation, spec))) {
            it->second.reachable = false;
            continue;
        }
        DeviceView& view = it->second;
        view.outstanding = spec;
        view.outstanding_round = round_;
        view.outstanding_correlation = correlation;
        view.acked = false;
        planner_->on_dispatched(proposal.device_id, spec);
        summary.dispatched.push_back(spec);
        dispatchable.erase(proposal.device_id);
    }

    summary.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    log_line("round " + std::to_string(summary.round) + ": " +
             std::to_string(summary.received.size()) + "/" +
             std::to_string(summary.polled.size()) + " reports, dispatched " +
             std::to_string(summary.dispatched.size()));
    round_log_.push_back(summary);
    if (round_log_.size() > 4096) round_log_.erase(round_log_.begin());
    return summary;
}

int Coordinator::run_until_finished(int max_rounds) {
    int rounds = 0;
    while (rounds < max_rounds) {
        const auto t0 = std::chrono::steady_clock::now();
        run_round();
        ++rounds;
        if (planner_->finished(views_)) break;
        std::this_thread::sleep_until(t0 + config_.poll_period);
    }
    return rounds;
}

StubLlm::StubLlm(std::chrono::milliseconds latency, double failure_p,
                 std::uint64_t seed)
    : latency_(latency), failure_p_(failure_p), state_(splitmix64(seed)) {
    if (failure_p < 0.0 || failure_p > 1.0) {
        throw Error(ErrorCode::Validation, "failure probability outside [0, 1]");
    }
}

bool StubLlm::call() {
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    ++calls_;
    const bool failed = unit_draw(state_) < failure_p_;
    if (failed) ++failures_;
    return !failed;
}

CentralizedResult run_centralized_baseline(int n_devices,
                                           std::chrono::milliseconds call_latency,
                                           double codegen_failure_p,
                                           std::uint64_t seed) {
    if (n_devices < 1) {
        throw Error(ErrorCode::Validation, "need at least one device");
    }
    StubLlm plan_llm(call_latency, 0.0, seed);
    StubLlm codegen_llm(call_latency, codegen_failure_p, seed ^ 0x51ceb00cULL);
    CentralizedResult result;
    result.devices = n_devices;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < n_devices; ++i) {
        plan_llm.call();
        if (!codegen_llm.call()) {
            result.success = false;
            ++result.failed_calls;
        }
    }
    result.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return result;
}

StubLatencyExtractor::StubLatencyExtractor(const ArgumentExtractor& inner,
                                           std::chrono::milliseconds latency,
                                           double failure_p, std::uint64_t seed)
    : inner_(&inner),
      latency_(latency),
      failure_p_(failure_p),
      state_(splitmix64(seed)) {
    if (failure_p < 0.0 || failure_p > 1.0) {
        throw Error(ErrorCode::Validation, "failure probability outside [0, 1]");
    }
}

std::string StubLatencyExtractor::extractor_id() const {
    return "stub-latency(" + inner_->extractor_id() + ")";
}

std::vector<std::string> StubLatencyExtractor::extract(
    const std::string& text, const ApiFunction& function) const {
    Interval interval;
    interval.start = std::chrono::steady_clock::now();
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    bool failed = false;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        failed = unit_draw(state_) < failure_p_;
        interval.end = std::chrono::steady_clock::now();
        interval.ok = !failed;
        intervals_.push_back(interval);
    }
    if (failed) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "code generation call failed");
    }
    return inner_->extract(text, function);
}

std::vector<StubLatencyExtractor::Interval> StubLatencyExtractor::intervals() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return intervals_;
}

int StubLatencyExtractor::attempts() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(intervals_.size());
}

int StubLatencyExtractor::failures() const {
    std::lock_guard<std::mutex> lock(mutex_);
    int count = 0;
    for (const auto& interval : intervals_) count += interval.ok ? 0 : 1;
    return count;
}

std::chrono::milliseconds interval_union_span(
    const std::vector<StubLatencyExtractor::Interval>& intervals) {
    if (intervals.empty()) return std::chrono::milliseconds(0);
    auto first = intervals.front().start;
    auto last = intervals.front().end;
    for (const auto& interval : intervals) {
        first = std::min(first, interval.start);
        last = std::max(last, interval.end);
    }
    return std::chrono::duration_cast<std::chrono::milliseconds>(last - first);
}

} // namespace llmind
