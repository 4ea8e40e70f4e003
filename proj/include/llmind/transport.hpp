#pragma once

#include "llmind/codegen.hpp"
#include "llmind/report.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace llmind {

enum class MessageType { Poll, Report, Assign, Ack };

const char* message_type_name(MessageType type);

/// One protocol message. Unused fields stay at their defaults and are not
/// encoded, so decode(encode(m)) == m holds field-exactly.
struct WireMessage {
    MessageType type = MessageType::Poll;
    std::uint64_t round = 0;          // poll, report
    std::uint64_t correlation_id = 0; // all types; ack echoes the assign's id
    std::string device_id;            // ack: the confirming agent
    std::optional<DeviceReport> report;  // report payload
    std::optional<SubtaskSpec> subtask;  // assign payload

    bool operator==(const WireMessage&) const = default;
};

WireMessage make_poll(std::uint64_t round, std::uint64_t correlation_id);
WireMessage make_report(std::uint64_t round, std::uint64_t correlation_id,
                        DeviceReport report);
WireMessage make_assign(std::uint64_t correlation_id, SubtaskSpec subtask);
WireMessage make_ack(std::uint64_t correlation_id, std::string device_id);

/// Canonical single-line encoding (stable key order, no trailing newline).
std::string encode(const WireMessage& message);

/// Parses one complete line. Throws protocol error on malformed JSON or a
/// missing/unknown type, framing error on an oversized line. Unknown extra
/// fields are ignored.
WireMessage decode(std::string_view line);

/// Non-throwing decode; stores the error text when it fails.
std::optional<WireMessage> try_decode(std::string_view line, std::string* error);

inline constexpr std::size_t kMaxLineBytes = 1 << 20;

/// Reassembles LF-terminated lines from arbitrary byte chunks. A line longer
/// than kMaxLineBytes is dropped (counted) and the stream resynchronizes at
/// the next LF; surrounding lines are unaffected.
class LineFramer {
public:
    /// Complete lines finished by this chunk, without their terminators.
    std::vector<std::string> feed(std::string_view chunk);
    std::uint64_t oversized_dropped() const { return oversized_dropped_; }

private:
    std::string buffer_;
    bool discarding_ = false;
    std::uint64_t oversized_dropped_ = 0;
};

/// Renders a message as one human-readable sentence for the M2M log.
std::string m2m_line(const WireMessage& message, const std::string& from,
                     const std::string& to);

/// Thread-safe message queue with timed pop; one per protocol participant.
class Inbox {
public:
    void push(WireMessage message);
    std::optional<WireMessage> pop(std::chrono::milliseconds timeout);
    std::optional<WireMessage> try_pop();
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<WireMessage> queue_;
};

/// Sends messages toward named peers; returns false when the peer is
/// unreachable.
class MessageBus {
public:
    virtual ~MessageBus() = default;
    virtual bool send(const std::string& from, const std::string& to,
                      const WireMessage& message) = 0;
};

/// In-process transport: every message passes through encode → decode, so
/// protocol tests exercise the wire contract without sockets. Delivery order
/// per sender is the send order. Optionally mirrors traffic to an M2M log
/// sink and counts messages by type.
class InProcessHub final : public MessageBus {
public:
    explicit InProcessHub(LogSink m2m_sink = nullptr);

    void attach(const std::string& name, std::shared_ptr<Inbox> inbox);
    void detach(const std::string& name);
    /// Detached peers stay silent: sends to them return false.
    bool send(const std::string& from, const std::string& to,
              const WireMessage& message) override;
    std::uint64_t delivered_count(MessageType type) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Inbox>> inboxes_;
    std::map<MessageType, std::uint64_t> delivered_;
    LogSink m2m_sink_;
};

/// One poll per endpoint; per-endpoint success is independent.
std::map<std::string, bool> broadcast_poll(MessageBus& bus, const std::string& from,
                                           const std::vector<std::string>& endpoints,
                                           std::uint64_t round,
                                           std::uint64_t correlation_base);

inline constexpr std::uint16_t kDefaultPort = 7707;

/// Bind address from LLMIND_BIND, else "0.0.0.0:7707".
std::string default_bind_address();

/// Splits "host:port"; the port falls back to kDefaultPort.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

} // namespace llmind
