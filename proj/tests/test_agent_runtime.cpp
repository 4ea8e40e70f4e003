#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "llmind/agent_runtime.hpp"
#include "llmind/errors.hpp"
#include "llmind/sim_devices.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

using namespace llmind;
using namespace std::chrono_literals;

namespace {

ApiFunction one_int_function(const std::string& name, const std::string& param,
                             const std::string& description) {
    ApiFunction fn;
    fn.name = name;
    fn.description = description;
    ApiParameter p;
    p.name = param;
    p.value_type = ValueType::Integer;
    p.range = {{0.0, 100.0}};
    p.description = "target " + param;
    fn.parameters.push_back(p);
    return fn;
}

/// Arity-1-only corpus device; calls succeed instantly and are counted.
class DialDevice : public DeviceHandle {
public:
    explicit DialDevice(std::string id) : id_(std::move(id)) {
        profile_.device_id = id_;
        profile_.device_type = "bench_dial";
        profile_.version = 1;
        profile_.functions.push_back(one_int_function(
            "set_gain", "gain", "Adjust the gain knob of the amplifier stage."));
        profile_.functions.push_back(one_int_function(
            "set_rate", "rate", "Change the rate dial of the capture pipeline."));
    }
    std::string device_id() const override { return id_; }
    const DeviceApiProfile& profile() const override { return profile_; }
    std::string call(const std::string& function_name,
                     const std::vector<std::string>& args) override {
        std::lock_guard<std::mutex> lock(mutex_);
        ++calls_;
        return function_name + "=" + (args.empty() ? "?" : args[0]);
    }
    std::map<std::string, std::string> attributes() const override {
        std::lock_guard<std::mutex> lock(mutex_);
        return {{"calls", std::to_string(calls_)}};
    }
    int calls() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return calls_;
    }
    void bump_profile() {
        profile_.version += 1;
        profile_.functions.push_back(one_int_function(
            "set_bias", "bias", "Trim the bias dial of the output stage."));
    }

private:
    std::string id_;
    DeviceApiProfile profile_;
    mutable std::mutex mutex_;
    int calls_ = 0;
};

/// Device whose calls stall for a fixed time before succeeding.
class SlowDevice : public DeviceHandle {
public:
    SlowDevice(std::string id, std::chrono::milliseconds stall)
        : id_(std::move(id)), stall_(stall) {
        profile_.device_id = id_;
        profile_.device_type = "bench_slow";
        profile_.version = 1;
        profile_.functions.push_back(one_int_function(
            "set_gain", "gain", "Adjust the gain knob of the amplifier stage."));
    }
    std::string device_id() const override { return id_; }
    const DeviceApiProfile& profile() const override { return profile_; }
    std::string call(const std::string&,
                     const std::vector<std::string>&) override {
        std::this_thread::sleep_for(stall_);
        return "done";
    }
    std::map<std::string, std::string> attributes() const override {
        return {{"kind", "slow"}};
    }

private:
    std::string id_;
    std::chrono::milliseconds stall_;
    DeviceApiProfile profile_;
};

SubtaskSpec subtask(std::uint64_t id, const std::string& device,
                    const std::string& text, std::uint64_t round = 1) {
    return {id, device, text, round};
}

std::shared_ptr<const EmbeddingProvider> provider() {
    return std::make_shared<HashingEmbeddingProvider>();
}

AgentConfig agent_config(const std::string& device_id) {
    AgentConfig config;
    config.device_id = device_id;
    return config;
}

} // namespace

TEST_CASE("an idle agent reports ok with its profile exactly once") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));

    auto first = agent.handle_poll();
    CHECK(first.device_id == "dial_1");
    CHECK(first.status == DeviceStatus::Ok);
    CHECK_FALSE(first.subtask_status.has_value());
    CHECK(first.attributes.at("calls") == "0");
    CHECK(first.attributes.at("dropped_subtasks") == "0");
    REQUIRE(first.profile_update.has_value());
    CHECK(first.profile_update->version == 1);

    auto second = agent.handle_poll();
    CHECK_FALSE(second.profile_update.has_value());

    device.bump_profile();
    auto third = agent.handle_poll();
    REQUIRE(third.profile_update.has_value());
    CHECK(third.profile_update->version == 2);
    CHECK_FALSE(agent.handle_poll().profile_update.has_value());
}

TEST_CASE("a warehouse subtask executes through the full pipeline") {
    auto world = make_warehouse_world(5, 31);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 5);
    RobotDevice robot(world, "robot_1", profile);
    ReferenceExtractor extractor;
    AgentRuntime agent(robot, provider(), extractor, agent_config("robot_1"));

    agent.handle_assign(subtask(11, "robot_1", "Move to shelf one."));
    CHECK(agent.status_of(11) == CompletionStatus::None);
    auto record = agent.interpret_loop_step();
    REQUIRE(record.has_value());
    CHECK(record->final_status == CompletionStatus::Completed);
    REQUIRE(record->call_result.has_value());
    CHECK(record->call_result->value == "arrived at shelf 1");
    CHECK(world.robot_positions.at("robot_1") == "shelf_1");
    CHECK(agent.status_of(11) == CompletionStatus::Completed);

    auto report = agent.handle_poll();
    REQUIRE(report.subtask_status.has_value());
    CHECK(report.subtask_status->first == 11);
    CHECK(report.subtask_status->second == CompletionStatus::Completed);
    REQUIRE(report.subtask_result.has_value());
    CHECK(*report.subtask_result == "arrived at shelf 1");
    // Attribute snapshot was refreshed after the run.
    CHECK(report.attributes.at("position") == "shelf_1");

    CHECK_FALSE(agent.interpret_loop_step().has_value());
}

TEST_CASE("gibberish matches something but dies at extraction") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));

    agent.handle_assign(subtask(5, "dial_1", "qwzx flrm"));
    auto record = agent.interpret_loop_step();
    REQUIRE(record.has_value());
    CHECK(record->final_status == CompletionStatus::NotExecutable);
    REQUIRE(record->call_result.has_value());
    CHECK(record->call_result->error_code == "extraction-arity");
    CHECK(device.calls() == 0);
    CHECK(agent.status_of(5) == CompletionStatus::NotExecutable);
}

TEST_CASE("a new assignment supersedes the queued occupant") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));

    agent.handle_assign(subtask(1, "dial_1", "Set the gain knob to five."));
    agent.handle_assign(subtask(2, "dial_1", "Set the rate dial to nine."));
    CHECK(agent.status_of(1) == CompletionStatus::Superseded);
    CHECK(agent.dropped_count() == 1);

    auto record = agent.interpret_loop_step();
    REQUIRE(record.has_value());
    CHECK(record->subtask_id == 2);
    CHECK(record->final_status == CompletionStatus::Completed);
    CHECK(device.calls() == 1);

    auto report = agent.handle_poll();
    CHECK(report.attributes.at("dropped_subtasks") == "1");
    REQUIRE(report.subtask_status.has_value());
    CHECK(report.subtask_status->first == 2);
}

TEST_CASE("an executing subtask is not cancellable; the newcomer waits") {
    SlowDevice device("slow_1", 120ms);
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("slow_1"));

    agent.handle_assign(subtask(1, "slow_1", "Set the gain knob to five."));
    std::thread runner([&] { agent.interpret_loop_step(); });
    std::this_thread::sleep_for(30ms);

    // Mid-execution: the run is Ongoing and polls answer immediately.
    auto before = std::chrono::steady_clock::now();
    auto report = agent.handle_poll();
    auto poll_latency = std::chrono::steady_clock::now() - before;
    CHECK(poll_latency < 60ms);
    REQUIRE(report.subtask_status.has_value());
    CHECK(report.subtask_status->second == CompletionStatus::Ongoing);

    agent.handle_assign(subtask(2, "slow_1", "Set the gain knob to nine."));
    CHECK(agent.status_of(1) == CompletionStatus::Ongoing);
    // A step while one run is in flight yields nothing and steals nothing.
    CHECK_FALSE(agent.interpret_loop_step().has_value());
    runner.join();

    CHECK(agent.status_of(1) == CompletionStatus::Completed);
    CHECK(agent.status_of(2) == CompletionStatus::None);
    auto second = agent.interpret_loop_step();
    REQUIRE(second.has_value());
    CHECK(second->subtask_id == 2);
    CHECK(agent.dropped_count() == 0);
    CHECK(agent.history().size() == 2);
}

TEST_CASE("misaddressed subtasks raise addressing errors and fault one report") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));

    try {
        agent.handle_assign(subtask(9, "dial_2", "Set the gain knob to five."));
        FAIL("expected an addressing error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Addressing);
    }
    CHECK(agent.handle_poll().status == DeviceStatus::Fault);
    CHECK(agent.handle_poll().status == DeviceStatus::Ok);
    CHECK_FALSE(agent.interpret_loop_step().has_value());
}

TEST_CASE("history keeps monotone subtask ids for sequential executions") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));
    for (std::uint64_t id = 1; id <= 5; ++id) {
        agent.handle_assign(
            subtask(id, "dial_1", "Set the gain knob to five."));
        REQUIRE(agent.interpret_loop_step().has_value());
    }
    auto history = agent.history();
    REQUIRE(history.size() == 5);
    for (std::size_t i = 1; i < history.size(); ++i) {
        CHECK(history[i].subtask_id > history[i - 1].subtask_id);
    }
}

TEST_CASE("history is bounded by the configured ring size") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentConfig config = agent_config("dial_1");
    config.history_limit = 3;
    AgentRuntime agent(device, provider(), extractor, config);
    for (std::uint64_t id = 1; id <= 7; ++id) {
        agent.handle_assign(
            subtask(id, "dial_1", "Set the gain knob to five."));
        REQUIRE(agent.interpret_loop_step().has_value());
    }
    auto history = agent.history();
    REQUIRE(history.size() == 3);
    CHECK(history.front().subtask_id == 5);
    CHECK(history.back().subtask_id == 7);
}

TEST_CASE("every assigned subtask drains to exactly one terminal status") {
    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));

    std::mt19937_64 rng(404);
    const std::string texts[] = {
        "Set the gain knob to five.",
        "Set the rate dial to twelve.",
        "qwzx flrm",
        "Set the gain knob to one hundred forty-two.", // out of range -> fails
    };
    int assigned = 0;
    for (int i = 0; i < 200; ++i) {
        if (rng() % 2 == 0) {
            agent.handle_assign(
                subtask(static_cast<std::uint64_t>(++assigned), "dial_1",
                        texts[rng() % 4]));
        } else {
            agent.interpret_loop_step();
        }
    }
    while (agent.interpret_loop_step().has_value()) {
    }

    int superseded = 0, completed = 0, not_executable = 0;
    for (int id = 1; id <= assigned; ++id) {
        auto status = agent.status_of(static_cast<std::uint64_t>(id));
        if (status == CompletionStatus::Superseded) ++superseded;
        if (status == CompletionStatus::Completed) ++completed;
        if (status == CompletionStatus::NotExecutable) ++not_executable;
    }
    CHECK(superseded + completed + not_executable == assigned);
    CHECK(superseded == agent.dropped_count());
    CHECK(completed > 0);
    CHECK(not_executable > 0);
}

TEST_CASE("a started agent answers polls and assignments over the hub") {
    std::vector<std::string> m2m;
    std::mutex m2m_mutex;
    InProcessHub hub([&](const std::string& line) {
        std::lock_guard<std::mutex> lock(m2m_mutex);
        m2m.push_back(line);
    });
    auto coordinator_inbox = std::make_shared<Inbox>();
    auto agent_inbox = std::make_shared<Inbox>();
    hub.attach("coordinator", coordinator_inbox);
    hub.attach("dial_1", agent_inbox);

    DialDevice device("dial_1");
    ReferenceExtractor extractor;
    AgentRuntime agent(device, provider(), extractor, agent_config("dial_1"));
    agent.start(hub, "coordinator", agent_inbox);

    hub.send("coordinator", "dial_1", make_poll(1, 100));
    auto report = coordinator_inbox->pop(1000ms);
    REQUIRE(report.has_value());
    CHECK(report->type == MessageType::Report);
    CHECK(report->round == 1);
    CHECK(report->correlation_id == 100);
    REQUIRE(report->report.has_value());
    CHECK(report->report->device_id == "dial_1");

    hub.send("coordinator", "dial_1",
             make_assign(200, subtask(7, "dial_1", "Set the gain knob to five.")));
    auto ack = coordinator_inbox->pop(1000ms);
    REQUIRE(ack.has_value());
    CHECK(ack->type == MessageType::Ack);
    CHECK(ack->correlation_id == 200);
    CHECK(ack->device_id == "dial_1");

    for (int i = 0; i < 100; ++i) {
        if (agent.status_of(7) == CompletionStatus::Completed) break;
        std::this_thread::sleep_for(10ms);
    }
    CHECK(agent.status_of(7) == CompletionStatus::Completed);

    // A misaddressed assignment gets no ack but faults the next report.
    hub.send("coordinator", "dial_1",
             make_assign(201, subtask(8, "dial_9", "Set the gain knob to one.")));
    std::this_thread::sleep_for(50ms);
    hub.send("coordinator", "dial_1", make_poll(2, 102));
    auto faulted = coordinator_inbox->pop(1000ms);
    REQUIRE(faulted.has_value());
    REQUIRE(faulted->report.has_value());
    CHECK(faulted->report->status == DeviceStatus::Fault);

    agent.stop();
    std::lock_guard<std::mutex> lock(m2m_mutex);
    CHECK(!m2m.empty());
}
