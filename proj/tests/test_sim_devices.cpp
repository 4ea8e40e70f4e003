#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "llmind/codegen.hpp"
#include "llmind/errors.hpp"
#include "llmind/fsm_executor.hpp"
#include "llmind/sim_devices.hpp"

#include <set>
#include <string>
#include <vector>

using namespace llmind;

namespace {

const char* kRepoRoot = LLMIND_REPO_ROOT;

std::string scenario_path(int n) {
    return std::string(kRepoRoot) + "/config/wifi_scenario" + std::to_string(n) +
           ".json";
}

std::string joined_vacancy(const WarehouseWorld& world, int shelf) {
    const auto& vacant = world.vacancy.at(shelf);
    if (vacant.empty()) return "none";
    std::string joined;
    for (int id : vacant) {
        if (!joined.empty()) joined += ",";
        joined += std::to_string(id);
    }
    return joined;
}

} // namespace

TEST_CASE("warehouse worlds are deterministic and well-formed") {
    auto a = make_warehouse_world(20, 42);
    auto b = make_warehouse_world(20, 42);
    CHECK(a.vacancy == b.vacancy);
    auto c = make_warehouse_world(20, 43);
    CHECK(a.vacancy != c.vacancy);

    int total_vacant = 0;
    auto big = make_warehouse_world(200, 9);
    REQUIRE(big.vacancy.size() == 200);
    for (const auto& [shelf, vacant] : big.vacancy) {
        CHECK(shelf >= 1);
        CHECK(shelf <= 200);
        for (int id : vacant) {
            CHECK(id >= 1);
            CHECK(id <= 10);
        }
        CHECK(std::set<int>(vacant.begin(), vacant.end()).size() == vacant.size());
        total_vacant += static_cast<int>(vacant.size());
    }
    double fraction = total_vacant / 2000.0;
    CHECK(fraction > 0.22);
    CHECK(fraction < 0.38);

    CHECK_THROWS_AS(make_warehouse_world(0, 1), Error);
}

TEST_CASE("robot profiles stamp identity and clamp shelf ranges") {
    auto tmpl = load_robot_template();
    auto profile = make_robot_profile(tmpl, "robot_3", 8);
    CHECK(profile.device_id == "robot_3");
    CHECK(profile.version == 1);
    const auto* move = profile.find_function("move_to_shelf");
    REQUIRE(move != nullptr);
    REQUIRE(move->parameters.at(0).range.has_value());
    CHECK(move->parameters.at(0).range->first == 1.0);
    CHECK(move->parameters.at(0).range->second == 8.0);
    const auto* identify = profile.find_function("identify_vacancy_by_shelf");
    REQUIRE(identify != nullptr);
    CHECK(identify->parameters.at(0).range->second == 8.0);
}

TEST_CASE("a robot moves to a shelf and reads the seeded vacancy map") {
    auto world = make_warehouse_world(5, 1234);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 5);
    RobotDevice robot(world, "robot_1", profile);

    CHECK(robot.attributes().at("position") == "base");
    CHECK(robot.call("move_to_shelf", {"1"}) == "arrived at shelf 1");
    CHECK(world.robot_positions.at("robot_1") == "shelf_1");
    CHECK(robot.call("identify_vacancy_by_shelf", {"1"}) ==
          joined_vacancy(world, 1));

    for (int shelf = 1; shelf <= 5; ++shelf) {
        robot.call("move_to_shelf", {std::to_string(shelf)});
        CHECK(robot.call("identify_vacancy_by_shelf",
                         {std::to_string(shelf)}) ==
              joined_vacancy(world, shelf));
    }
}

TEST_CASE("inspecting a shelf the robot is not at fails its precondition") {
    auto world = make_warehouse_world(5, 77);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 5);
    RobotDevice robot(world, "robot_1", profile);
    robot.call("move_to_shelf", {"1"});
    try {
        robot.call("identify_vacancy_by_shelf", {"2"});
        FAIL("expected a precondition error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Precondition);
        CHECK(std::string(e.what()).find("shelf_2") != std::string::npos);
    }
}

TEST_CASE("an out-of-range shelf never reaches the device") {
    auto world = make_warehouse_world(5, 77);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 5);
    RobotDevice robot(world, "robot_1", profile);
    const auto* move = profile.find_function("move_to_shelf");
    REQUIRE(move != nullptr);
    ArgumentSet args;
    args.bindings = {{"shelf_id", "6"}};
    CHECK_THROWS_AS(compose_call(*move, args), Error);
    CHECK(robot.attributes().at("position") == "base");
}

TEST_CASE("unknown robot functions raise dispatch errors") {
    auto world = make_warehouse_world(2, 5);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 2);
    RobotDevice robot(world, "robot_1", profile);
    try {
        robot.call("launch_confetti", {});
        FAIL("expected a dispatch error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Dispatch);
    }
}

TEST_CASE("robot housekeeping calls behave") {
    auto world = make_warehouse_world(3, 5);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 3);
    RobotDevice robot(world, "robot_1", profile);
    CHECK(robot.call("capture_image", {}) == "stored image_1.jpg");
    CHECK(robot.call("capture_image", {}) == "stored image_2.jpg");
    CHECK(robot.call("move_to_coordinates", {"12", "7"}) ==
          "arrived at grid (12, 7)");
    CHECK(world.robot_positions.at("robot_1") == "grid_12_7");
    CHECK(robot.call("return_to_base", {}) == "docked at base");
    CHECK(robot.attributes().at("position") == "base");
    auto status = robot.call("get_status", {});
    CHECK(status.find("ok") == 0);
    CHECK(status.find("position base") != std::string::npos);
}

TEST_CASE("a composed plan runs end to end on a simulated robot") {
    auto world = make_warehouse_world(4, 99);
    auto profile = make_robot_profile(load_robot_template(), "robot_1", 4);
    RobotDevice robot(world, "robot_1", profile);
    const auto* move = profile.find_function("move_to_shelf");
    REQUIRE(move != nullptr);
    ArgumentSet args;
    args.bindings = {{"shelf_id", "3"}};
    auto plan = compose_call(*move, args);
    auto record = run_fsm(plan, 1, robot);
    CHECK(record.final_status == CompletionStatus::Completed);
    REQUIRE(record.call_result.has_value());
    CHECK(record.call_result->ok);
    CHECK(record.call_result->value == "arrived at shelf 3");
    CHECK(world.robot_positions.at("robot_1") == "shelf_3");
}

TEST_CASE("scenario configs load with their calibrated client fleets") {
    auto world = load_wifi_config(scenario_path(1));
    REQUIRE(world.clients.size() == 2);
    CHECK(world.clients[0].device_id == "wifi_sdr_1");
    CHECK(world.clients[0].log_cw_min == 10);
    CHECK(world.clients[0].log_cw_max == 15);
    CHECK(world.clients[0].can_switch_band == false);
    CHECK(world.clients[0].can_sense_interference == true);
    CHECK(world.clients[1].device_id == "wifi_commercial_1");
    CHECK(world.clients[1].nominal_rate_bps == doctest::Approx(45e6));
    CHECK_FALSE(world.interference_on);

    auto world2 = load_wifi_config(scenario_path(2));
    CHECK(world2.interference_per_add == doctest::Approx(0.35));
    CHECK(world2.clients[0].base_per_band_2_4 == doctest::Approx(0.12));
    CHECK(world2.clients[1].base_per_band_2_4 == doctest::Approx(0.05));
    CHECK(world2.clients[1].base_per_band_5 == doctest::Approx(0.067));

    for (const auto& client : world.clients) {
        auto tmpl = load_wifi_template(client.profile_template);
        auto profile = make_wifi_profile(tmpl, client.device_id);
        CHECK(profile.device_id == client.device_id);
    }
    CHECK(load_wifi_template("wifi_sdr").find_function("set_contention_window") !=
          nullptr);
    CHECK(load_wifi_template("wifi_commercial")
              .find_function("set_contention_window") == nullptr);
    CHECK_THROWS_AS(load_wifi_template("wifi_toaster"), Error);
    CHECK_THROWS_AS(load_wifi_config("/nonexistent.json"), Error);
}

TEST_CASE("contention window and band calls mutate client state") {
    auto world = load_wifi_config(scenario_path(1));
    WifiDevice sdr(world, "wifi_sdr_1",
                   make_wifi_profile(load_wifi_template("wifi_sdr"), "wifi_sdr_1"));
    WifiDevice commercial(world, "wifi_commercial_1",
                          make_wifi_profile(load_wifi_template("wifi_commercial"),
                                            "wifi_commercial_1"));

    CHECK(sdr.call("set_contention_window", {"2", "4"}) ==
          "contention window exponents set to (2, 4)");
    CHECK(world.find_client("wifi_sdr_1")->log_cw_min == 2);
    CHECK(world.find_client("wifi_sdr_1")->log_cw_max == 4);
    CHECK(sdr.attributes().at("log_cw_min") == "2");
    CHECK(sdr.attributes().at("log_cw_max") == "4");

    CHECK(commercial.call("switch_band", {"band_5"}) == "switched to band_5");
    CHECK(world.find_client("wifi_commercial_1")->band == WifiBand::Band5);
    CHECK(commercial.attributes().at("band") == "band_5");

    try {
        sdr.call("switch_band", {"band_5"});
        FAIL("expected a capability error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Capability);
    }
    CHECK(world.find_client("wifi_sdr_1")->band == WifiBand::Band2_4);
    CHECK(sdr.call("get_known_aps", {}).find("ap_floor2_band_2_4") !=
          std::string::npos);

    CHECK_THROWS_AS(sdr.call("set_contention_window", {"9", "3"}), Error);
    CHECK_THROWS_AS(commercial.call("switch_band", {"band_99"}), Error);
}

TEST_CASE("a capability failure surfaces as a not-executable run") {
    auto world = load_wifi_config(scenario_path(2));
    auto profile = make_wifi_profile(load_wifi_template("wifi_sdr"), "wifi_sdr_1");
    const auto* switch_fn = profile.find_function("switch_band");
    REQUIRE(switch_fn != nullptr);
    WifiDevice sdr(world, "wifi_sdr_1", profile);

    ArgumentSet args;
    args.bindings = {{"band", "band_5"}};
    auto plan = compose_call(*switch_fn, args);
    auto record = run_fsm(plan, 7, sdr);
    CHECK(record.final_status == CompletionStatus::NotExecutable);
    REQUIRE(record.call_result.has_value());
    CHECK(record.call_result->error_code == "capability");
}

TEST_CASE("packet error rate is the clipped band-plus-interference sum") {
    auto world = load_wifi_config(scenario_path(2));
    auto& sdr = *world.find_client("wifi_sdr_1");
    auto& commercial = *world.find_client("wifi_commercial_1");

    CHECK(compute_per(world, sdr) == doctest::Approx(0.12));
    CHECK(compute_per(world, commercial) == doctest::Approx(0.05));

    world.set_interference(true);
    CHECK(compute_per(world, sdr) == doctest::Approx(0.47));
    CHECK(compute_per(world, commercial) == doctest::Approx(0.40));
    CHECK(compute_per(world, sdr) > 0.20);
    CHECK(compute_per(world, commercial) > 0.20);

    world.set_band("wifi_commercial_1", WifiBand::Band5);
    CHECK(compute_per(world, commercial) == doctest::Approx(0.067));
    CHECK(compute_per(world, commercial) < 0.20);

    world.set_interference(false);
    CHECK(compute_per(world, sdr) == doctest::Approx(0.12));

    sdr.base_per_band_2_4 = 0.9;
    world.set_interference(true);
    CHECK(compute_per(world, sdr) == doctest::Approx(1.0));
}

TEST_CASE("a lone client owns the whole medium") {
    auto world = load_wifi_config(scenario_path(1));
    world.clients.erase(world.clients.begin() + 1);
    world.replications = 8;
    auto metrics = simulate_upload(world);
    REQUIRE(metrics.count("wifi_sdr_1") == 1);
    CHECK(metrics.at("wifi_sdr_1").airtime_share == doctest::Approx(1.0));
    CHECK(metrics.at("wifi_sdr_1").upload_time_s > 0.0);
}

TEST_CASE("identical twins split the medium evenly") {
    auto world = load_wifi_config(scenario_path(1));
    world.clients[0] = world.clients[1];
    world.clients[0].device_id = "wifi_twin_1";
    world.clients[1].device_id = "wifi_twin_2";
    auto metrics = simulate_upload(world);
    CHECK(metrics.at("wifi_twin_1").airtime_share ==
          doctest::Approx(0.5).epsilon(0.04));
    CHECK(metrics.at("wifi_twin_2").airtime_share ==
          doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("upload simulation is deterministic given the seed") {
    auto world = load_wifi_config(scenario_path(1));
    world.set_contention_window("wifi_sdr_1", 4, 6);
    world.replications = 4;
    auto a = simulate_upload(world);
    auto b = simulate_upload(world);
    REQUIRE(a.size() == b.size());
    for (const auto& [id, m] : a) {
        CHECK(m.upload_time_s == b.at(id).upload_time_s);
        CHECK(m.airtime_share == b.at(id).airtime_share);
    }
    CHECK_THROWS_AS(simulate_upload(WifiWorld{}), Error);
}

TEST_CASE("stepping the contention window down walks the deadline crossing to the schedule floor") {
    auto world = load_wifi_config(scenario_path(1));
    const std::pair<int, int> schedule[] = {
        {10, 15}, {8, 12}, {6, 9}, {4, 6}, {2, 4}};
    std::vector<double> upload_times;
    std::vector<double> shares;
    for (auto [lo, hi] : schedule) {
        world.set_contention_window("wifi_sdr_1", lo, hi);
        auto metrics = simulate_upload(world);
        upload_times.push_back(metrics.at("wifi_sdr_1").upload_time_s);
        shares.push_back(metrics.at("wifi_sdr_1").airtime_share);
    }
    for (std::size_t i = 1; i < upload_times.size(); ++i) {
        CHECK(upload_times[i] < upload_times[i - 1]);
        CHECK(shares[i] >= shares[i - 1]);
    }
    // The deadline is met exactly at the schedule floor, not a step earlier.
    CHECK(upload_times[3] > 16.0);
    CHECK(upload_times[4] <= 16.0);

    // Alone on the medium, the client meets the deadline even at defaults.
    auto alone = world;
    alone.set_contention_window("wifi_sdr_1", 10, 15);
    alone.clients.erase(alone.clients.begin() + 1);
    alone.replications = 8;
    CHECK(simulate_upload(alone).at("wifi_sdr_1").upload_time_s <= 16.0);
}

TEST_CASE("link metric attributes carry the shared-medium view") {
    auto world = load_wifi_config(scenario_path(2));
    WifiDevice sdr(world, "wifi_sdr_1",
                   make_wifi_profile(load_wifi_template("wifi_sdr"), "wifi_sdr_1"));
    auto attrs = sdr.attributes();
    CHECK(attrs.count("upload_time_s") == 1);
    CHECK(attrs.count("airtime_share") == 1);
    CHECK(attrs.at("per") == "0.120");
    CHECK(attrs.at("band") == "band_2_4");
    CHECK(attrs.at("mcs_index") == "1");
    CHECK(attrs.at("interference_detected") == "false");

    world.set_interference(true);
    CHECK(sdr.attributes().at("interference_detected") == "true");
    CHECK(sdr.attributes().at("per") == "0.470");

    WifiDevice commercial(world, "wifi_commercial_1",
                          make_wifi_profile(load_wifi_template("wifi_commercial"),
                                            "wifi_commercial_1"));
    // The commercial NIC has no interference sensor.
    CHECK(commercial.attributes().at("interference_detected") == "false");

    auto line = sdr.call("get_link_metrics", {});
    CHECK(line.find("upload_time_s ") != std::string::npos);
    CHECK(line.find("per 0.470") != std::string::npos);
}
