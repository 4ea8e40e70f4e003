#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "llmind/codegen.hpp"
#include "llmind/errors.hpp"
#include "llmind/fsm_executor.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace llmind;

namespace {

const std::vector<FsmState> kExpectedStates = {
    FsmState::Start, FsmState::PreProcessing, FsmState::FunctionCall,
    FsmState::PostProcessing, FsmState::End};

enum class Behavior { Succeed, Fail, Stall };

// Scriptable device: per-function behavior plus a call counter.
class ScriptedDevice final : public DeviceHandle {
public:
    explicit ScriptedDevice(DeviceApiProfile profile) : profile_(std::move(profile)) {}

    std::string device_id() const override { return profile_.device_id; }
    const DeviceApiProfile& profile() const override { return profile_; }

    std::string call(const std::string& function_name,
                     const std::vector<std::string>&) override {
        ++calls_;
        Script script;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            script = script_;
        }
        if (function_name == script.target || script.target.empty()) {
            switch (script.behavior) {
                case Behavior::Fail:
                    throw Error(ErrorCode::Precondition, "scripted failure");
                case Behavior::Stall:
                    std::this_thread::sleep_for(script.stall);
                    break;
                case Behavior::Succeed:
                    break;
            }
        }
        return "ok:" + function_name;
    }

    std::map<std::string, std::string> attributes() const override { return {}; }

    void script(const std::string& target, Behavior behavior,
                std::chrono::milliseconds stall = std::chrono::milliseconds(50)) {
        std::lock_guard<std::mutex> lock(mutex_);
        script_ = {target, behavior, stall};
    }

    int calls() const { return calls_.load(); }

private:
    struct Script {
        std::string target;
        Behavior behavior = Behavior::Succeed;
        std::chrono::milliseconds stall{0};
    };

    DeviceApiProfile profile_;
    std::mutex mutex_;
    Script script_;
    std::atomic<int> calls_{0};
};

DeviceApiProfile plain_profile() {
    DeviceApiProfile p;
    p.device_id = "dev_1";
    ApiFunction f;
    f.name = "do_thing";
    f.description = "does the thing";
    ApiParameter param;
    param.name = "amount";
    param.value_type = ValueType::Integer;
    param.description = "how much";
    f.parameters.push_back(param);
    p.functions.push_back(f);
    return p;
}

DeviceApiProfile hooked_profile() {
    auto p = plain_profile();
    ApiFunction init;
    init.name = "warm_up";
    init.description = "initialize the actuator";
    init.role_hint = RoleHint::Init;
    ApiFunction release;
    release.name = "cool_down";
    release.description = "release the actuator";
    release.role_hint = RoleHint::Release;
    p.functions.push_back(init);
    p.functions.push_back(release);
    return p;
}

CallPlan plan_for(const DeviceApiProfile& profile) {
    return compose_call(*profile.find_function("do_thing"), ArgumentSet{{{"amount", "3"}}});
}

std::vector<FsmState> states_of(const ExecutionRecord& record) {
    std::vector<FsmState> out;
    for (const auto& [state, ts] : record.state_log) out.push_back(state);
    return out;
}

FsmTimeouts fast_timeouts() {
    FsmTimeouts t;
    t.pre = std::chrono::milliseconds(10);
    t.call = std::chrono::milliseconds(10);
    t.post = std::chrono::milliseconds(10);
    return t;
}

} // namespace

TEST_CASE("successful run walks the five states in order") {
    ScriptedDevice device(plain_profile());
    auto record = run_fsm(plan_for(device.profile()), 1, device);
    CHECK(states_of(record) == kExpectedStates);
    CHECK(record.final_status == CompletionStatus::Completed);
    REQUIRE(record.call_result.has_value());
    CHECK(record.call_result->ok);
    CHECK(record.call_result->value == "ok:do_thing");
    CHECK(device.calls() == 1);

    for (std::size_t i = 1; i < record.state_log.size(); ++i) {
        CHECK(record.state_log[i].second >= record.state_log[i - 1].second);
    }
}

TEST_CASE("device failure still enters post-processing") {
    ScriptedDevice device(plain_profile());
    device.script("do_thing", Behavior::Fail);
    auto record = run_fsm(plan_for(device.profile()), 2, device);
    CHECK(states_of(record) == kExpectedStates);
    CHECK(record.final_status == CompletionStatus::NotExecutable);
    REQUIRE(record.call_result.has_value());
    CHECK(!record.call_result->ok);
    CHECK(record.call_result->error_code == "precondition");
    CHECK(device.calls() == 1);
}

TEST_CASE("call timeout ends not-executable with timing detail") {
    ScriptedDevice device(plain_profile());
    device.script("do_thing", Behavior::Stall, std::chrono::milliseconds(80));
    auto record = run_fsm(plan_for(device.profile()), 3, device, fast_timeouts());
    CHECK(states_of(record) == kExpectedStates);
    CHECK(record.final_status == CompletionStatus::NotExecutable);
    REQUIRE(record.call_result.has_value());
    CHECK(record.call_result->error_code == "timeout");
    CHECK(std::string(record.call_result->detail).find("ms") != std::string::npos);
    std::this_thread::sleep_for(std::chrono::milliseconds(120));
}

TEST_CASE("init and release hooks run around the call") {
    ScriptedDevice device(hooked_profile());
    auto record = run_fsm(plan_for(device.profile()), 4, device);
    CHECK(record.final_status == CompletionStatus::Completed);
    CHECK(device.calls() == 3);
}

TEST_CASE("a failed init hook skips the device call but not post-processing") {
    ScriptedDevice device(hooked_profile());
    device.script("warm_up", Behavior::Fail);
    auto record = run_fsm(plan_for(device.profile()), 5, device);
    CHECK(states_of(record) == kExpectedStates);
    CHECK(record.final_status == CompletionStatus::NotExecutable);
    // warm_up failed, do_thing skipped, cool_down still ran.
    CHECK(device.calls() == 2);
    REQUIRE(record.call_result.has_value());
    CHECK(record.call_result->error_code == "precondition");
}

TEST_CASE("profiles without hooks pass through pre and post as no-ops") {
    ScriptedDevice device(plain_profile());
    auto record = run_fsm(plan_for(device.profile()), 6, device);
    CHECK(states_of(record) == kExpectedStates);
    CHECK(record.log_lines.size() == 5);
}

TEST_CASE("log lines carry timestamp, device, subtask, and state") {
    ScriptedDevice device(plain_profile());
    auto record = run_fsm(plan_for(device.profile()), 42, device);
    REQUIRE(record.log_lines.size() == 5);
    const std::string& line = record.log_lines[0];
    CHECK(line.find(" dev_1 42 START ") != std::string::npos);
    CHECK(record.log_lines[2].find("FUNCTION_CALL") != std::string::npos);
    CHECK(record.log_lines[4].find("END") != std::string::npos);
}

TEST_CASE("live status snapshot reaches a terminal value") {
    ScriptedDevice device(plain_profile());
    std::atomic<CompletionStatus> live{CompletionStatus::None};
    auto record = run_fsm(plan_for(device.profile()), 7, device, {}, nullptr, &live);
    CHECK(live.load() == CompletionStatus::Completed);
    CHECK(record.final_status == CompletionStatus::Completed);
}

TEST_CASE("randomized injections never bend the state order") {
    std::mt19937 rng(20260819);
    std::uniform_int_distribution<int> pick(0, 2);
    ScriptedDevice device(plain_profile());
    auto plan = plan_for(device.profile());

    int completed = 0, failed = 0;
    const int runs = 1000;
    int previous_calls = 0;
    for (int i = 0; i < runs; ++i) {
        const auto behavior = static_cast<Behavior>(pick(rng));
        device.script("do_thing", behavior, std::chrono::milliseconds(25));
        auto record = run_fsm(plan, static_cast<std::uint64_t>(i), device,
                              fast_timeouts());
        REQUIRE(states_of(record) == kExpectedStates);
        const int calls_now = device.calls();
        CHECK(calls_now - previous_calls == 1);
        previous_calls = calls_now;
        if (record.final_status == CompletionStatus::Completed) {
            ++completed;
            REQUIRE(record.call_result.has_value());
            CHECK(record.call_result->ok);
        } else {
            REQUIRE(record.final_status == CompletionStatus::NotExecutable);
            ++failed;
            REQUIRE(record.call_result.has_value());
            CHECK(!record.call_result->ok);
        }
    }
    CHECK(completed + failed == runs);
    CHECK(completed > 0);
    CHECK(failed > 0);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
}
