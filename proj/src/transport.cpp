#include "llmind/transport.hpp"

#include "json_codec.hpp"
#include "llmind/errors.hpp"

#include <cstdlib>

namespace llmind {

namespace {

using nlohmann::ordered_json;

std::optional<MessageType> message_type_from_name(const std::string& name) {
    if (name == "poll") return MessageType::Poll;
    if (name == "report") return MessageType::Report;
    if (name == "assign") return MessageType::Assign;
    if (name == "ack") return MessageType::Ack;
    return std::nullopt;
}

ordered_json subtask_to_json(const SubtaskSpec& s) {
    ordered_json j;
    j["subtask_id"] = s.subtask_id;
    j["device_id"] = s.device_id;
    j["text"] = s.text;
    j["issued_round"] = s.issued_round;
    return j;
}

SubtaskSpec subtask_from_json(const ordered_json& j) {
    SubtaskSpec s;
    s.subtask_id = j.at("subtask_id").get<std::uint64_t>();
    s.device_id = j.at("device_id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.issued_round = j.at("issued_round").get<std::uint64_t>();
    return s;
}

std::optional<CompletionStatus> completion_status_from_name(const std::string& name) {
    if (name == "none") return CompletionStatus::None;
    if (name == "ongoing") return CompletionStatus::Ongoing;
    if (name == "completed") return CompletionStatus::Completed;
    if (name == "not_executable") return CompletionStatus::NotExecutable;
    if (name == "superseded") return CompletionStatus::Superseded;
    return std::nullopt;
}

} // namespace

namespace jsoncodec {

ordered_json report_to_json(const DeviceReport& report) {
    ordered_json j;
    j["device_id"] = report.device_id;
    j["status"] = device_status_name(report.status);
    j["attributes"] = ordered_json::object();
    for (const auto& [k, v] : report.attributes) j["attributes"][k] = v;
    if (report.subtask_status) {
        j["subtask_status"] = {
            {"subtask_id", report.subtask_status->first},
            {"status", completion_status_name(report.subtask_status->second)}};
        if (report.subtask_result) {
            j["subtask_status"]["result"] = *report.subtask_result;
        }
    }
    if (report.profile_update) {
        j["profile_update"] = profile_to_json(*report.profile_update);
    }
    return j;
}

DeviceReport report_from_json(const ordered_json& j) {
    DeviceReport r;
    r.device_id = j.at("device_id").get<std::string>();
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") {
        r.status = DeviceStatus::Ok;
    } else if (status == "fault") {
        r.status = DeviceStatus::Fault;
    } else {
        throw Error(ErrorCode::Validation, "unknown device status '" + status + "'");
    }
    if (j.contains("attributes")) {
        for (const auto& [k, v] : j.at("attributes").items()) {
            r.attributes[k] = v.get<std::string>();
        }
    }
    if (j.contains("subtask_status") && !j.at("subtask_status").is_null()) {
        const auto& ss = j.at("subtask_status");
        auto cs = completion_status_from_name(ss.at("status").get<std::string>());
        if (!cs) {
            throw Error(ErrorCode::Validation, "unknown completion status in report");
        }
        r.subtask_status = {ss.at("subtask_id").get<std::uint64_t>(), *cs};
        if (ss.contains("result") && !ss.at("result").is_null()) {
            r.subtask_result = ss.at("result").get<std::string>();
        }
    }
    if (j.contains("profile_update") && !j.at("profile_update").is_null()) {
        r.profile_update = profile_from_json(j.at("profile_update"));
    }
    return r;
}

} // namespace jsoncodec

const char* device_status_name(DeviceStatus status) {
    switch (status) {
        case DeviceStatus::Ok: return "ok";
        case DeviceStatus::Fault: return "fault";
    }
    return "ok";
}

const char* message_type_name(MessageType type) {
    switch (type) {
        case MessageType::Poll: return "poll";
        case MessageType::Report: return "report";
        case MessageType::Assign: return "assign";
        case MessageType::Ack: return "ack";
    }
    return "poll";
}

WireMessage make_poll(std::uint64_t round, std::uint64_t correlation_id) {
    WireMessage m;
    m.type = MessageType::Poll;
    m.round = round;
    m.correlation_id = correlation_id;
    return m;
}

WireMessage make_report(std::uint64_t round, std::uint64_t correlation_id,
                        DeviceReport report) {
    WireMessage m;
    m.type = MessageType::Report;
    m.round = round;
    m.correlation_id = correlation_id;
    m.device_id = report.device_id;
    m.report = std::move(report);
    return m;
}

WireMessage make_assign(std::uint64_t correlation_id, SubtaskSpec subtask) {
    WireMessage m;
    m.type = MessageType::Assign;
    m.correlation_id = correlation_id;
    m.device_id = subtask.device_id;
    m.subtask = std::move(subtask);
    return m;
}

WireMessage make_ack(std::uint64_t correlation_id, std::string device_id) {
    WireMessage m;
    m.type = MessageType::Ack;
    m.correlation_id = correlation_id;
    m.device_id = std::move(device_id);
    return m;
}

std::string encode(const WireMessage& message) {
    ordered_json j;
    j["type"] = message_type_name(message.type);
    switch (message.type) {
        case MessageType::Poll:
            j["round"] = message.round;
            j["correlation_id"] = message.correlation_id;
            break;
        case MessageType::Report:
            j["round"] = message.round;
            j["correlation_id"] = message.correlation_id;
            j["device_id"] = message.device_id;
            j["report"] =
                message.report ? jsoncodec::report_to_json(*message.report)
                               : ordered_json(nullptr);
            break;
        case MessageType::Assign:
            j["correlation_id"] = message.correlation_id;
            j["device_id"] = message.device_id;
            j["subtask"] = message.subtask ? subtask_to_json(*message.subtask)
                                           : ordered_json(nullptr);
            break;
        case MessageType::Ack:
            j["correlation_id"] = message.correlation_id;
            j["device_id"] = message.device_id;
            break;
    }
    return j.dump();
}

WireMessage decode(std::string_view line) {
    if (line.size() > kMaxLineBytes) {
        throw Error(ErrorCode::Framing,
                    "line of " + std::to_string(line.size()) + " bytes exceeds the " +
                        std::to_string(kMaxLineBytes) + " byte limit");
    }
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        std::string snippet(line.substr(0, 120));
        throw Error(ErrorCode::Protocol,
                    std::string("malformed message line: ") + e.what() + " in \"" +
                        snippet + "\"");
    }
    try {
        if (!j.is_object() || !j.contains("type")) {
            throw Error(ErrorCode::Protocol, "message has no type field");
        }
        const auto type = message_type_from_name(j.at("type").get<std::string>());
        if (!type) {
            throw Error(ErrorCode::Protocol,
                        "unknown message type '" + j.at("type").get<std::string>() + "'");
        }
        WireMessage m;
        m.type = *type;
        switch (*type) {
            case MessageType::Poll:
                m.round = j.at("round").get<std::uint64_t>();
                m.correlation_id = j.at("correlation_id").get<std::uint64_t>();
                break;
            case MessageType::Report:
                m.round = j.at("round").get<std::uint64_t>();
                m.correlation_id = j.at("correlation_id").get<std::uint64_t>();
                m.device_id = j.at("device_id").get<std::string>();
                m.report = jsoncodec::report_from_json(j.at("report"));
                break;
            case MessageType::Assign:
                m.correlation_id = j.at("correlation_id").get<std::uint64_t>();
                m.device_id = j.at("device_id").get<std::string>();
                m.subtask = subtask_from_json(j.at("subtask"));
                break;
            case MessageType::Ack:
                m.correlation_id = j.at("correlation_id").get<std::uint64_t>();
                m.device_id = j.at("device_id").get<std::string>();
                break;
        }
        return m;
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Protocol, std::string("bad message shape: ") + e.what());
    }
}

std::optional<WireMessage> try_decode(std::string_view line, std::string* error) {
    try {
        return decode(line);
    } catch (const Error& e) {
        if (error) *error = e.what();
        return std::nullopt;
    }
}

std::vector<std::string> LineFramer::feed(std::string_view chunk) {
    std::vector<std::string> lines;
    for (char c : chunk) {
        if (c == '\n') {
            if (discarding_) {
                discarding_ = false;
            } else {
                lines.push_back(std::move(buffer_));
            }
            buffer_.clear();
            continue;
        }
        if (discarding_) continue;
        buffer_ += c;
        if (buffer_.size() > kMaxLineBytes) {
            buffer_.clear();
            discarding_ = true;
            ++oversized_dropped_;
        }
    }
    return lines;
}

std::string m2m_line(const WireMessage& message, const std::string& from,
                     const std::string& to) {
    switch (message.type) {
        case MessageType::Poll:
            return "round " + std::to_string(message.round) + ": " + from + " asks " +
                   to + " for its report.";
        case MessageType::Report: {
            std::string line = "round " + std::to_string(message.round) + ": " + from +
                               " reports status " +
                               (message.report ? device_status_name(message.report->status)
                                               : "unknown");
            if (message.report && message.report->subtask_status) {
                line += "; subtask " +
                        std::to_string(message.report->subtask_status->first) + " is " +
                        completion_status_name(message.report->subtask_status->second);
            }
            if (message.report && message.report->profile_update) {
                line += "; carries API profile version " +
                        std::to_string(message.report->profile_update->version);
            }
            return line + ".";
        }
        case MessageType::Assign:
            return from + " assigns subtask " +
                   (message.subtask ? std::to_string(message.subtask->subtask_id)
                                    : std::string("?")) +
                   " to " + to + ": \"" +
                   (message.subtask ? message.subtask->text : std::string()) + "\"";
        case MessageType::Ack:
            return from + " confirms receipt of subtask assignment " +
                   std::to_string(message.correlation_id) + ".";
    }
    return {};
}

void Inbox::push(WireMessage message) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        queue_.push_back(std::move(message));
    }
    cv_.notify_one();
}

std::optional<WireMessage> Inbox::pop(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) {
        return std::nullopt;
    }
    WireMessage m = std::move(queue_.front());
    queue_.pop_front();
    return m;
}

std::optional<WireMessage> Inbox::try_pop() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    WireMessage m = std::move(queue_.front());
    queue_.pop_front();
    return m;
}

std::size_t Inbox::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return queue_.size();
}

InProcessHub::InProcessHub(LogSink m2m_sink) : m2m_sink_(std::move(m2m_sink)) {}

void InProcessHub::attach(const std::string& name, std::shared_ptr<Inbox> inbox) {
    std::lock_guard<std::mutex> lock(mutex_);
    inboxes_[name] = std::move(inbox);
}

void InProcessHub::detach(const std::string& name) {
    std::lock_guard<std::mutex> lock(mutex_);
    inboxes_.erase(name);
}

bool InProcessHub::send(const std::string& from, const std::string& to,
                        const WireMessage& message) {
    std::shared_ptr<Inbox> inbox;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = inboxes_.find(to);
        if (it == inboxes_.end()) return false;
        inbox = it->second;
    }
    // Round-trip through the wire encoding so in-process runs exercise the
    // same contract as TCP.
    WireMessage delivered = decode(encode(message));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++delivered_[delivered.type];
    }
    if (m2m_sink_) m2m_sink_(m2m_line(delivered, from, to));
    inbox->push(std::move(delivered));
    return true;
}

std::uint64_t InProcessHub::delivered_count(MessageType type) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = delivered_.find(type);
    return it == delivered_.end() ? 0 : it->second;
}

std::map<std::string, bool> broadcast_poll(MessageBus& bus, const std::string& from,
                                           const std::vector<std::string>& endpoints,
                                           std::uint64_t round,
                                           std::uint64_t correlation_base) {
    std::map<std::string, bool> results;
    std::uint64_t correlation = correlation_base;
    for (const auto& endpoint : endpoints) {
        bool ok = false;
        try {
            ok = bus.send(from, endpoint, make_poll(round, correlation++));
        } catch (const Error&) {
            ok = false;
        }
        results[endpoint] = ok;
    }
    return results;
}

std::string default_bind_address() {
    if (const char* env = std::getenv("LLMIND_BIND"); env && *env) return env;
    return "0.0.0.0:" + std::to_string(kDefaultPort);
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) return {endpoint, kDefaultPort};
    const std::string host = endpoint.substr(0, colon);
    const std::string port_text = endpoint.substr(colon + 1);
    if (port_text.empty()) return {host, kDefaultPort};
    int port = 0;
    try {
        port = std::stoi(port_text);
    } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "bad port in endpoint '" + endpoint + "'");
    }
    if (port <= 0 || port > 65535) {
        throw Error(ErrorCode::Config, "port out of range in '" + endpoint + "'");
    }
    return {host, static_cast<std::uint16_t>(port)};
}

} // namespace llmind
