#include "llmind/scenarios.hpp"

#include "llmind/agent_runtime.hpp"
#include "llmind/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace llmind {

namespace {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

/// M2M lines arrive from coordinator and agent threads alike.
struct M2mCapture {
    std::mutex mutex;
    std::vector<std::string> lines;

    LogSink sink() {
        return [this](const std::string& line) {
            std::lock_guard<std::mutex> lock(mutex);
            lines.push_back(line);
        };
    }
    std::vector<std::string> take() {
        std::lock_guard<std::mutex> lock(mutex);
        return std::move(lines);
    }
    std::vector<std::string> drain_from(std::size_t& cursor) {
        std::lock_guard<std::mutex> lock(mutex);
        std::vector<std::string> out(lines.begin() +
                                         static_cast<std::ptrdiff_t>(cursor),
                                     lines.end());
        cursor = lines.size();
        return out;
    }
};

std::string report_attribute(const DeviceView& view, const std::string& key) {
    if (!view.last_report) return "";
    auto it = view.last_report->attributes.find(key);
    return it == view.last_report->attributes.end() ? "" : it->second;
}

void append_event(ScenarioResult& result, double sim_time, std::string text) {
    if (!result.timeline.empty()) {
        sim_time = std::max(sim_time, result.timeline.back().sim_time_s);
    }
    result.timeline.push_back({sim_time, std::move(text)});
}

void drain_planner_events(ScenarioResult& result, Planner& planner) {
    for (auto& [round, text] : planner.drain_events()) {
        append_event(result, static_cast<double>(round), std::move(text));
    }
}

nlohmann::json load_config_doc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::MalformedDocument, "config " + path +
                                                      " is not valid JSON");
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Warehouse benchmark
// ---------------------------------------------------------------------------

constexpr const char* kVacancyInstruction =
    "Please check if there are vacant positions on the shelves.";

// The scenario runners embed at deployment width. The narrow default keeps
// unit fixtures cheap, but number words in large fleets ("Move to shelf
// eight.") are noise tokens that can tip a close ranking into the wrong
// sibling function; 768 buckets keep every phrasing the shipped planners
// emit collision-free.
constexpr std::size_t kEmbeddingWidth = 768;

struct DistributedTrial {
    bool success = false;
    int rounds = 0;
    int llm_calls = 0;
    int llm_failures = 0;
    int first_attempt_successes = 0;
    std::chrono::milliseconds codegen_wall{0};
    std::vector<std::pair<std::uint64_t, std::string>> events;
    std::vector<std::string> m2m;
};

DistributedTrial run_distributed_trial(const WarehouseRunConfig& config,
                                       std::uint64_t trial_seed,
                                       bool want_logs) {
    DistributedTrial trial;
    auto world = make_warehouse_world(config.n_robots, trial_seed);

    M2mCapture m2m;
    InProcessHub hub(want_logs ? m2m.sink() : LogSink{});
    auto inbox = std::make_shared<Inbox>();
    hub.attach("coordinator", inbox);

    auto provider = std::make_shared<HashingEmbeddingProvider>(kEmbeddingWidth);
    ReferenceExtractor reference;
    auto tmpl = load_robot_template();

    std::vector<std::unique_ptr<RobotDevice>> devices;
    std::vector<std::unique_ptr<StubLatencyExtractor>> stubs;
    std::vector<std::unique_ptr<AgentRuntime>> agents;
    for (int k = 1; k <= config.n_robots; ++k) {
        const std::string id = "robot_" + std::to_string(k);
        devices.push_back(std::make_unique<RobotDevice>(
            world, id, make_robot_profile(tmpl, id, config.n_robots)));
        stubs.push_back(std::make_unique<StubLatencyExtractor>(
            reference, config.stub.latency, config.stub.failure_p,
            mix_seed(trial_seed, static_cast<std::uint64_t>(k))));
        AgentConfig agent_config;
        agent_config.device_id = id;
        agents.push_back(std::make_unique<AgentRuntime>(
            *devices.back(), provider, *stubs.back(), agent_config));
        auto agent_inbox = std::make_shared<Inbox>();
        hub.attach(id, agent_inbox);
        agents.back()->start(hub, "coordinator", agent_inbox);
    }

    auto planner = std::make_shared<WarehousePlanner>();
    CoordinatorConfig cc;
    cc.poll_period = config.poll_period;
    cc.report_timeout = config.report_timeout;
    Coordinator coordinator(hub, inbox, cc, planner);
    for (int k = 1; k <= config.n_robots; ++k) {
        coordinator.register_agent("robot_" + std::to_string(k));
    }
    coordinator.submit_instruction(kVacancyInstruction);

    trial.rounds = coordinator.run_until_finished(config.max_rounds);
    for (auto& agent : agents) agent->stop();

    trial.success = planner->finished(coordinator.device_views()) &&
                    planner->all_succeeded() &&
                    static_cast<int>(planner->vacancy_results().size()) ==
                        config.n_robots;
    std::vector<StubLatencyExtractor::Interval> all_intervals;
    for (auto& stub : stubs) {
        auto intervals = stub->intervals();
        trial.llm_calls += stub->attempts();
        trial.llm_failures += stub->failures();
        if (!intervals.empty() && intervals.front().ok) {
            ++trial.first_attempt_successes;
        }
        all_intervals.insert(all_intervals.end(), intervals.begin(),
                             intervals.end());
    }
    trial.codegen_wall = interval_union_span(all_intervals);
    trial.events = planner->drain_events();
    trial.m2m = m2m.take();
    return trial;
}

// ---------------------------------------------------------------------------
// WiFi plumbing
// ---------------------------------------------------------------------------

struct WifiAgentBundle {
    std::unique_ptr<WifiDevice> device;
    std::unique_ptr<AgentRuntime> agent;
};

WifiAgentBundle start_wifi_agent(WifiWorld& world, InProcessHub& hub,
                                 Coordinator& coordinator,
                                 const std::shared_ptr<const EmbeddingProvider>& provider,
                                 const ArgumentExtractor& extractor,
                                 const WifiClientState& client) {
    WifiAgentBundle bundle;
    bundle.device = std::make_unique<WifiDevice>(
        world, client.device_id,
        make_wifi_profile(load_wifi_template(client.profile_template),
                          client.device_id));
    AgentConfig agent_config;
    agent_config.device_id = client.device_id;
    bundle.agent = std::make_unique<AgentRuntime>(*bundle.device, provider,
                                                  extractor, agent_config);
    auto inbox = std::make_shared<Inbox>();
    hub.attach(client.device_id, inbox);
    bundle.agent->start(hub, "coordinator", inbox);
    coordinator.register_agent(client.device_id);
    return bundle;
}

const std::vector<std::string> kWifiMetricsHeader = {
    "round",      "device",       "band",
    "log_cw_min", "log_cw_max",   "upload_time_s",
    "airtime_share", "per",       "interference_detected"};

void sample_wifi_rows(ScenarioResult& result, const Coordinator& coordinator,
                      std::uint64_t round) {
    for (const auto& [device_id, view] : coordinator.device_views()) {
        if (!view.last_report) continue;
        result.metrics_rows.push_back(
            {std::to_string(round), device_id, report_attribute(view, "band"),
             report_attribute(view, "log_cw_min"),
             report_attribute(view, "log_cw_max"),
             report_attribute(view, "upload_time_s"),
             report_attribute(view, "airtime_share"),
             report_attribute(view, "per"),
             report_attribute(view, "interference_detected")});
    }
}

std::optional<double> row_value(const ScenarioResult& result,
                                std::uint64_t round, const std::string& device,
                                const std::string& column) {
    auto col = std::find(result.metrics_header.begin(),
                         result.metrics_header.end(), column);
    if (col == result.metrics_header.end()) return std::nullopt;
    const auto index = static_cast<std::size_t>(
        col - result.metrics_header.begin());
    for (const auto& row : result.metrics_rows) {
        if (row.size() <= index) continue;
        if (row[0] == std::to_string(round) && row[1] == device) {
            try {
                return std::stod(row[index]);
            } catch (...) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

/// Last sampled value of one column for one device.
std::optional<double> final_value(const ScenarioResult& result,
                                  const std::string& device,
                                  const std::string& column) {
    auto col = std::find(result.metrics_header.begin(),
                         result.metrics_header.end(), column);
    if (col == result.metrics_header.end()) return std::nullopt;
    const auto index = static_cast<std::size_t>(
        col - result.metrics_header.begin());
    for (auto it = result.metrics_rows.rbegin(); it != result.metrics_rows.rend();
         ++it) {
        if (it->size() > index && (*it)[1] == device) {
            try {
                return std::stod((*it)[index]);
            } catch (...) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

std::string final_text(const ScenarioResult& result, const std::string& device,
                       const std::string& column) {
    auto col = std::find(result.metrics_header.begin(),
                         result.metrics_header.end(), column);
    if (col == result.metrics_header.end()) return "";
    const auto index = static_cast<std::size_t>(
        col - result.metrics_header.begin());
    for (auto it = result.metrics_rows.rbegin(); it != result.metrics_rows.rend();
         ++it) {
        if (it->size() > index && (*it)[1] == device) return (*it)[index];
    }
    return "";
}

std::string cw_text(std::pair<int, int> cw) {
    return "(" + std::to_string(cw.first) + ", " + std::to_string(cw.second) +
           ")";
}

std::string seconds_text(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

} // namespace

const char* warehouse_mode_name(WarehouseMode mode) {
    return mode == WarehouseMode::Distributed ? "distributed" : "centralized";
}

std::string write_scenario_outputs(const ScenarioResult& result,
                                   const std::string& directory) {
    if (directory.empty()) {
        throw Error(ErrorCode::Validation, "output directory is empty");
    }
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        throw Error(ErrorCode::Io,
                    "cannot create " + directory + ": " + ec.message());
    }

    {
        std::ofstream csv(directory + "/metrics.csv");
        if (!csv) throw Error(ErrorCode::Io, "cannot write metrics.csv");
        for (std::size_t i = 0; i < result.metrics_header.size(); ++i) {
            csv << (i ? "," : "") << csv_field(result.metrics_header[i]);
        }
        csv << '\n';
        for (const auto& row : result.metrics_rows) {
            if (row.size() != result.metrics_header.size()) {
                throw Error(ErrorCode::Validation,
                            "metrics row width does not match the header");
            }
            for (std::size_t i = 0; i < row.size(); ++i) {
                csv << (i ? "," : "") << csv_field(row[i]);
            }
            csv << '\n';
        }
    }
    {
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& entry : result.timeline) {
            doc.push_back({{"t", entry.sim_time_s}, {"event", entry.event}});
        }
        std::ofstream timeline(directory + "/timeline.json");
        if (!timeline) throw Error(ErrorCode::Io, "cannot write timeline.json");
        timeline << doc.dump(2) << '\n';
    }
    {
        std::ofstream m2m(directory + "/m2m.log");
        if (!m2m) throw Error(ErrorCode::Io, "cannot write m2m.log");
        for (const auto& line : result.m2m_lines) m2m << line << '\n';
    }
    return directory;
}

ScenarioResult run_warehouse(const WarehouseRunConfig& config) {
    if (config.n_robots < 1) {
        throw Error(ErrorCode::Validation, "the benchmark needs at least one robot");
    }
    if (config.trials < 1) {
        throw Error(ErrorCode::Validation, "trials must be at least 1");
    }
    if (config.stub.failure_p < 0.0 || config.stub.failure_p > 1.0) {
        throw Error(ErrorCode::Validation, "failure probability must be in [0, 1]");
    }

    ScenarioResult result;
    result.scenario_id =
        std::string("warehouse-") + warehouse_mode_name(config.mode);
    result.metrics_header = {"mode",        "n",
                             "trial",       "seed",
                             "success",     "rounds",
                             "llm_calls",   "llm_failures",
                             "first_attempt_successes", "codegen_wall_ms"};

    const double latency_ms =
        static_cast<double>(config.stub.latency.count());
    for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t trial_seed =
            mix_seed(config.seed, static_cast<std::uint64_t>(trial));
        if (config.mode == WarehouseMode::Distributed) {
            auto t = run_distributed_trial(config, trial_seed, trial == 0);
            result.metrics_rows.push_back(
                {"distributed", std::to_string(config.n_robots),
                 std::to_string(trial), std::to_string(trial_seed),
                 t.success ? "1" : "0", std::to_string(t.rounds),
                 std::to_string(t.llm_calls), std::to_string(t.llm_failures),
                 std::to_string(t.first_attempt_successes),
                 std::to_string(t.codegen_wall.count())});
            if (trial == 0) {
                append_event(result, 0.0,
                             "trial 0: vacancy instruction submitted to " +
                                 std::to_string(config.n_robots) + " robots");
                for (auto& [round, text] : t.events) {
                    append_event(result, static_cast<double>(round),
                                 std::move(text));
                }
                append_event(result, static_cast<double>(t.rounds),
                             t.success
                                 ? "trial 0: every shelf's vacancy reported"
                                 : "trial 0: plan did not complete");
                result.m2m_lines = std::move(t.m2m);
            }
            if (config.stub.failure_p == 0.0) {
                if (!t.success) {
                    result.check_failures.push_back(
                        "trial " + std::to_string(trial) +
                        ": distributed run failed with no injected failures");
                }
                if (latency_ms > 0.0 &&
                    static_cast<double>(t.codegen_wall.count()) >
                        2.5 * latency_ms) {
                    result.check_failures.push_back(
                        "trial " + std::to_string(trial) +
                        ": code-generation span " +
                        std::to_string(t.codegen_wall.count()) +
                        " ms exceeds 2.5x the stub latency");
                }
            }
        } else {
            auto baseline = run_centralized_baseline(
                config.n_robots, config.stub.latency, config.stub.failure_p,
                trial_seed);
            result.metrics_rows.push_back(
                {"centralized", std::to_string(config.n_robots),
                 std::to_string(trial), std::to_string(trial_seed),
                 baseline.success ? "1" : "0", "0",
                 std::to_string(2 * baseline.devices),
                 std::to_string(baseline.failed_calls),
                 std::to_string(baseline.devices - baseline.failed_calls),
                 std::to_string(baseline.wall_time.count())});
            if (trial == 0) {
                append_event(result, 0.0,
                             "trial 0: serial baseline planning and "
                             "generating for " +
                                 std::to_string(config.n_robots) + " devices");
                append_event(result, 1.0,
                             baseline.success
                                 ? "trial 0: every device call generated"
                                 : "trial 0: " +
                                       std::to_string(baseline.failed_calls) +
                                       " generation call(s) failed");
            }
            if (config.stub.failure_p == 0.0) {
                if (!baseline.success) {
                    result.check_failures.push_back(
                        "trial " + std::to_string(trial) +
                        ": baseline failed with no injected failures");
                }
                if (latency_ms > 0.0 &&
                    static_cast<double>(baseline.wall_time.count()) <
                        0.9 * config.n_robots * 2.0 * latency_ms) {
                    result.check_failures.push_back(
                        "trial " + std::to_string(trial) +
                        ": baseline wall time " +
                        std::to_string(baseline.wall_time.count()) +
                        " ms is below the serial sum bound");
                }
            }
        }
    }
    return result;
}

ScenarioResult run_wifi_scenario1(const WifiScenarioConfig& config) {
    const std::string path =
        config.config_path.empty()
            ? std::string(LLMIND_REPO_ROOT) + "/config/wifi_scenario1.json"
            : config.config_path;
    WifiWorld world = load_wifi_config(path);
    auto doc = load_config_doc(path);
    if (!doc.contains("qos") || !doc["qos"].contains("upload_deadline_s")) {
        throw Error(ErrorCode::Config,
                    "scenario config lacks qos.upload_deadline_s");
    }
    const double deadline = doc["qos"]["upload_deadline_s"].get<double>();
    const auto events = doc.value("events", nlohmann::json::object());
    const int join_round = events.value("client_joins_round", 2);
    const std::string joining_id =
        events.value("joining_client", std::string("wifi_commercial_1"));

    // The joining client waits off the air until its scripted round.
    std::optional<WifiClientState> joining;
    {
        auto it = std::find_if(world.clients.begin(), world.clients.end(),
                               [&](const WifiClientState& c) {
                                   return c.device_id == joining_id;
                               });
        if (it == world.clients.end()) {
            throw Error(ErrorCode::Config,
                        "joining client " + joining_id + " is not in the config");
        }
        joining = *it;
        world.clients.erase(it);
        world.invalidate_metrics();
    }

    WifiQosConfig qos;
    for (const auto& client : world.clients) {
        qos.upload_deadlines[client.device_id] = deadline;
        if (client.profile_template == "wifi_sdr") {
            qos.tunable_device = client.device_id;
        }
    }
    qos.upload_deadlines[joining->device_id] = deadline;
    if (qos.tunable_device.empty()) {
        throw Error(ErrorCode::Config, "no tunable client in the config");
    }
    if (config.schedule_floor) {
        if (*config.schedule_floor < 1 ||
            *config.schedule_floor > qos.schedule.size()) {
            throw Error(ErrorCode::Validation, "schedule floor out of range");
        }
        qos.schedule.resize(*config.schedule_floor);
    }
    const std::string tunable = qos.tunable_device;

    ScenarioResult result;
    result.scenario_id = "wifi-scenario-1";
    result.metrics_header = kWifiMetricsHeader;

    M2mCapture m2m;
    InProcessHub hub(m2m.sink());
    auto inbox = std::make_shared<Inbox>();
    hub.attach("coordinator", inbox);
    auto provider = std::make_shared<HashingEmbeddingProvider>(kEmbeddingWidth);
    ReferenceExtractor extractor;
    auto planner = std::make_shared<WifiQosPlanner>(qos);
    CoordinatorConfig cc;
    cc.poll_period = config.poll_period;
    cc.report_timeout = config.report_timeout;
    Coordinator coordinator(hub, inbox, cc, planner);

    std::map<std::string, WifiAgentBundle> bundles;
    for (const auto& client : world.clients) {
        bundles.emplace(client.device_id,
                        start_wifi_agent(world, hub, coordinator, provider,
                                         extractor, client));
    }
    append_event(result, 0.0, tunable + " uploading alone");

    int calm_rounds = 0;
    for (int r = 1; r <= config.max_rounds; ++r) {
        if (r == join_round && joining) {
            {
                std::lock_guard<std::mutex> lock(*world.gate);
                world.clients.push_back(*joining);
                world.invalidate_metrics();
            }
            bundles.emplace(joining->device_id,
                            start_wifi_agent(world, hub, coordinator, provider,
                                             extractor, *joining));
            append_event(result, static_cast<double>(r),
                         joining->device_id + " joined the channel");
            joining.reset();
        }
        if (config.inject_deadline && r == config.inject_round) {
            planner->set_deadline(config.inject_deadline->first,
                                  config.inject_deadline->second);
            append_event(result, static_cast<double>(r),
                         "upload deadline for " + config.inject_deadline->first +
                             " tightened to " +
                             seconds_text(config.inject_deadline->second) +
                             " s");
        }

        // Each simulated tick the stations re-sample their radio; one
        // client's window change shifts everyone's link metrics.
        for (auto& [device_id, bundle] : bundles) {
            bundle.agent->refresh_attributes();
        }
        coordinator.run_round();
        sample_wifi_rows(result, coordinator, coordinator.round());
        drain_planner_events(result, *planner);

        if (planner->halted()) {
            append_event(result, static_cast<double>(r),
                         "planner halted at contention window " +
                             cw_text(planner->current_cw()));
            break;
        }
        bool outstanding = false;
        for (const auto& [device_id, view] : coordinator.device_views()) {
            if (view.outstanding) outstanding = true;
        }
        const bool converged = planner->outcome() ==
                                   WifiQosPlanner::Outcome::Monitoring &&
                               planner->schedule_index() > 0 && !outstanding;
        if (converged && ++calm_rounds >= 2) {
            append_event(result, static_cast<double>(r),
                         "all clients within deadline at contention window " +
                             cw_text(planner->current_cw()) + "; monitoring");
            break;
        }
        if (!converged) calm_rounds = 0;
        std::this_thread::sleep_for(config.poll_period);
    }

    for (auto& [device_id, bundle] : bundles) bundle.agent->stop();
    result.m2m_lines = m2m.take();

    // Built-in checks for the default narrative; the floor and injection
    // variants assert their own outcomes instead.
    if (config.inject_deadline) {
        if (planner->outcome() != WifiQosPlanner::Outcome::RolledBack) {
            result.check_failures.push_back(
                "expected a rollback after the injected deadline violation");
        }
    } else if (config.schedule_floor) {
        if (planner->outcome() != WifiQosPlanner::Outcome::FloorStillViolated) {
            result.check_failures.push_back(
                "expected honest non-convergence at the raised schedule floor");
        }
    } else {
        if (planner->current_cw() != std::pair<int, int>{2, 4}) {
            result.check_failures.push_back(
                "terminal contention window is " +
                cw_text(planner->current_cw()) + ", not (2, 4)");
        }
        if (planner->outcome() != WifiQosPlanner::Outcome::Monitoring) {
            result.check_failures.push_back("planner did not settle into monitoring");
        }
        auto pre_join = row_value(result, 1, tunable, "upload_time_s");
        if (!pre_join || *pre_join > deadline) {
            result.check_failures.push_back(
                "the tunable client did not meet the deadline while alone");
        }
        auto at_join = row_value(result, static_cast<std::uint64_t>(join_round),
                                 tunable, "upload_time_s");
        if (!at_join || *at_join <= deadline) {
            result.check_failures.push_back(
                "the deadline was not violated when the second client joined");
        }
        for (const auto& [device_id, device_deadline] : qos.upload_deadlines) {
            auto upload = final_value(result, device_id, "upload_time_s");
            if (!upload || *upload > device_deadline) {
                result.check_failures.push_back(
                    device_id + " ended above its upload deadline");
            }
        }
        // Stepping down the schedule must never lengthen the tunable
        // client's upload: sweep every entry on the converged world.
        double previous = std::numeric_limits<double>::infinity();
        for (const auto& cw : qos.schedule) {
            WifiWorld sweep = world;
            sweep.gate = std::make_shared<std::mutex>();
            if (auto* client = sweep.find_client(tunable)) {
                client->log_cw_min = cw.first;
                client->log_cw_max = cw.second;
            }
            sweep.invalidate_metrics();
            const double upload = sweep.metrics().at(tunable).upload_time_s;
            if (upload > previous + 1e-9) {
                result.check_failures.push_back(
                    "upload time increased when stepping to " + cw_text(cw));
            }
            previous = upload;
        }
    }
    return result;
}

ScenarioResult run_wifi_scenario2(const WifiScenarioConfig& config) {
    const std::string path =
        config.config_path.empty()
            ? std::string(LLMIND_REPO_ROOT) + "/config/wifi_scenario2.json"
            : config.config_path;
    WifiWorld world = load_wifi_config(path);
    auto doc = load_config_doc(path);
    if (!doc.contains("qos") || !doc["qos"].contains("per_limit")) {
        throw Error(ErrorCode::Config, "scenario config lacks qos.per_limit");
    }
    const double per_limit = doc["qos"]["per_limit"].get<double>();
    const auto events = doc.value("events", nlohmann::json::object());
    const int on_round = events.value("interference_on_round", 2);
    const int off_round = events.value("interference_off_round", on_round + 4);

    ScenarioResult result;
    result.scenario_id = "wifi-scenario-2";
    result.metrics_header = kWifiMetricsHeader;

    M2mCapture m2m;
    InProcessHub hub(m2m.sink());
    auto inbox = std::make_shared<Inbox>();
    hub.attach("coordinator", inbox);
    auto provider = std::make_shared<HashingEmbeddingProvider>(kEmbeddingWidth);
    ReferenceExtractor extractor;
    WifiInterferenceConfig mitigation;
    mitigation.per_limit = per_limit;
    auto planner = std::make_shared<WifiInterferencePlanner>(mitigation);
    CoordinatorConfig cc;
    cc.poll_period = config.poll_period;
    cc.report_timeout = config.report_timeout;
    Coordinator coordinator(hub, inbox, cc, planner);

    std::map<std::string, WifiAgentBundle> bundles;
    std::vector<std::string> device_ids;
    for (const auto& client : world.clients) {
        device_ids.push_back(client.device_id);
        bundles.emplace(client.device_id,
                        start_wifi_agent(world, hub, coordinator, provider,
                                         extractor, client));
    }

    bool both_violated = false;
    bool not_executable_seen = false;
    std::string stuck_device;
    for (int r = 1; r <= config.max_rounds; ++r) {
        if (r == on_round) {
            std::lock_guard<std::mutex> lock(*world.gate);
            world.set_interference(true);
            append_event(result, static_cast<double>(r),
                         "interference source on (2.4 GHz degraded)");
        }
        if (r == off_round) {
            std::lock_guard<std::mutex> lock(*world.gate);
            world.set_interference(false);
            append_event(result, static_cast<double>(r),
                         "interference source off");
        }

        // Stations re-sample their radio every simulated tick.
        for (auto& [device_id, bundle] : bundles) {
            bundle.agent->refresh_attributes();
        }
        coordinator.run_round();
        sample_wifi_rows(result, coordinator, coordinator.round());
        drain_planner_events(result, *planner);

        bool all_over_limit = true;
        for (const auto& device_id : device_ids) {
            auto per = row_value(result, coordinator.round(), device_id, "per");
            if (!per || *per <= per_limit) all_over_limit = false;
        }
        if (all_over_limit && !device_ids.empty()) both_violated = true;
        for (const auto& [device_id, view] : coordinator.device_views()) {
            if (view.resolved_status == CompletionStatus::NotExecutable) {
                not_executable_seen = true;
                stuck_device = device_id;
            }
        }

        if (planner->finished(coordinator.device_views()) && r >= off_round) {
            break;
        }
        std::this_thread::sleep_for(config.poll_period);
    }

    for (auto& [device_id, bundle] : bundles) bundle.agent->stop();
    result.m2m_lines = m2m.take();

    if (!both_violated) {
        result.check_failures.push_back(
            "interference never pushed every client over the error budget");
    }
    if (!planner->triggered()) {
        result.check_failures.push_back("the mitigation never triggered");
    }
    bool someone_switched = false;
    for (const auto& [device_id, script] : planner->scripts()) {
        if (script.phase == WifiInterferencePlanner::Phase::Done) {
            someone_switched = true;
            auto per = final_value(result, device_id, "per");
            if (final_text(result, device_id, "band") != "band_5") {
                result.check_failures.push_back(device_id +
                                                " did not end on band_5");
            }
            if (!per || std::abs(*per - 0.067) > 0.001) {
                result.check_failures.push_back(
                    device_id + " post-switch error rate is not 0.067");
            }
        }
    }
    if (!someone_switched) {
        result.check_failures.push_back("no client completed a band switch");
    }
    if (!not_executable_seen) {
        result.check_failures.push_back(
            "no client reported the switch as not executable");
    } else {
        auto per = final_value(result, stuck_device, "per");
        if (!per || *per > per_limit) {
            result.check_failures.push_back(
                stuck_device + " did not recover after the interference stopped");
        }
    }
    return result;
}

ScenarioResult run_instruct(const InstructRunConfig& config) {
    if (config.text.empty()) {
        throw Error(ErrorCode::Validation, "instruction text is empty");
    }
    if (config.n_robots < 1) {
        throw Error(ErrorCode::Validation, "the system needs at least one robot");
    }

    ScenarioResult result;
    result.scenario_id = "instruct";
    result.metrics_header = {"round", "dispatched", "reports"};

    auto world = make_warehouse_world(config.n_robots, config.seed);
    M2mCapture m2m;
    InProcessHub hub(m2m.sink());
    auto inbox = std::make_shared<Inbox>();
    hub.attach("coordinator", inbox);
    auto provider = std::make_shared<HashingEmbeddingProvider>(kEmbeddingWidth);
    ReferenceExtractor extractor;
    auto tmpl = load_robot_template();

    std::vector<std::unique_ptr<RobotDevice>> devices;
    std::vector<std::unique_ptr<AgentRuntime>> agents;
    auto planner = std::make_shared<WarehousePlanner>();
    CoordinatorConfig cc;
    cc.poll_period = config.poll_period;
    cc.report_timeout = config.report_timeout;
    Coordinator coordinator(hub, inbox, cc, planner);
    for (int k = 1; k <= config.n_robots; ++k) {
        const std::string id = "robot_" + std::to_string(k);
        devices.push_back(std::make_unique<RobotDevice>(
            world, id, make_robot_profile(tmpl, id, config.n_robots)));
        AgentConfig agent_config;
        agent_config.device_id = id;
        agents.push_back(std::make_unique<AgentRuntime>(*devices.back(), provider,
                                                        extractor, agent_config));
        auto agent_inbox = std::make_shared<Inbox>();
        hub.attach(id, agent_inbox);
        agents.back()->start(hub, "coordinator", agent_inbox);
        coordinator.register_agent(id);
    }

    coordinator.submit_instruction(config.text);
    if (config.echo) {
        *config.echo << "instruction: " << config.text << '\n';
    }
    append_event(result, 0.0, "instruction submitted: " + config.text);

    std::size_t m2m_cursor = 0;
    bool completed = false;
    for (int r = 1; r <= config.max_rounds; ++r) {
        auto summary = coordinator.run_round();
        result.metrics_rows.push_back(
            {std::to_string(summary.round),
             std::to_string(summary.dispatched.size()),
             std::to_string(summary.received.size())});
        auto planner_events = planner->drain_events();
        if (config.echo) {
            *config.echo << "-- round " << summary.round << " --\n";
            for (const auto& line : m2m.drain_from(m2m_cursor)) {
                *config.echo << "  " << line << '\n';
            }
            for (const auto& [round, text] : planner_events) {
                *config.echo << "  planner: " << text << '\n';
            }
        }
        for (auto& [round, text] : planner_events) {
            append_event(result, static_cast<double>(round), std::move(text));
        }
        if (planner->finished(coordinator.device_views())) {
            completed = true;
            break;
        }
        std::this_thread::sleep_for(config.poll_period);
    }

    for (auto& agent : agents) agent->stop();
    result.m2m_lines = m2m.take();

    if (completed && planner->all_succeeded()) {
        for (const auto& [shelf, vacancy] : planner->vacancy_results()) {
            const std::string line = "shelf " + std::to_string(shelf) +
                                     " vacant positions: " + vacancy;
            if (config.echo) *config.echo << line << '\n';
            append_event(result, static_cast<double>(coordinator.round()), line);
        }
    } else if (completed) {
        const std::string line = "plan finished with failed steps";
        if (config.echo) *config.echo << line << '\n';
        append_event(result, static_cast<double>(coordinator.round()), line);
    } else {
        const std::string line =
            "warning: round budget expired before the plan completed";
        if (config.echo) *config.echo << line << '\n';
        append_event(result, static_cast<double>(coordinator.round()), line);
    }
    return result;
}

} // namespace llmind
