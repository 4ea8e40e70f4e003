#include "llmind/sim_devices.hpp"

#include "llmind/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace llmind {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit_interval(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

long long parse_integer_arg(const std::string& text, const char* function_name) {
    if (!value_parses_as(text, ValueType::Integer)) {
        throw Error(ErrorCode::TypeError, std::string(function_name) +
                                              " expected an integer, got '" +
                                              text + "'");
    }
    return std::stoll(text);
}

void require_arity(const std::vector<std::string>& args, std::size_t n,
                   const char* function_name) {
    if (args.size() != n) {
        throw Error(ErrorCode::Composition,
                    std::string(function_name) + " takes " + std::to_string(n) +
                        " arguments, got " + std::to_string(args.size()));
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Warehouse
// ---------------------------------------------------------------------------

WarehouseWorld make_warehouse_world(int n_shelves, std::uint64_t seed) {
    if (n_shelves < 1) {
        throw Error(ErrorCode::Validation, "a warehouse needs at least one shelf");
    }
    WarehouseWorld world;
    world.n_shelves = n_shelves;
    world.seed = seed;
    std::mt19937_64 rng(splitmix64(seed));
    for (int shelf = 1; shelf <= n_shelves; ++shelf) {
        std::vector<int> vacant;
        for (int position = 1; position <= 10; ++position) {
            if (unit_interval(rng) < 0.3) vacant.push_back(position);
        }
        world.vacancy[shelf] = std::move(vacant);
    }
    return world;
}

DeviceApiProfile load_robot_template() {
    return load_profile_file(std::string(LLMIND_REPO_ROOT) + "/corpora/robot.json");
}

DeviceApiProfile make_robot_profile(const DeviceApiProfile& template_profile,
                                    const std::string& device_id, int n_shelves) {
    DeviceApiProfile profile = template_profile;
    profile.device_id = device_id;
    profile.version = 1;
    for (auto& function : profile.functions) {
        for (auto& parameter : function.parameters) {
            if (parameter.name == "shelf_id") {
                parameter.range = {1.0, static_cast<double>(n_shelves)};
            }
        }
    }
    return profile;
}

RobotDevice::RobotDevice(WarehouseWorld& world, std::string device_id,
                         DeviceApiProfile profile)
    : world_(&world), device_id_(std::move(device_id)),
      profile_(std::move(profile)) {
    world_->robot_positions.emplace(device_id_, "base");
}

std::string RobotDevice::device_id() const { return device_id_; }

const DeviceApiProfile& RobotDevice::profile() const { return profile_; }

std::string RobotDevice::call(const std::string& function_name,
                              const std::vector<std::string>& args) {
    std::lock_guard<std::mutex> lock(*world_->gate);
    auto& position = world_->robot_positions[device_id_];
    if (function_name == "move_to_shelf") {
        require_arity(args, 1, "move_to_shelf");
        long long shelf = parse_integer_arg(args[0], "move_to_shelf");
        if (shelf < 1 || shelf > world_->n_shelves) {
            throw Error(ErrorCode::RangeError,
                        "shelf " + std::to_string(shelf) + " is outside [1, " +
                            std::to_string(world_->n_shelves) + "]");
        }
        position = "shelf_" + std::to_string(shelf);
        battery_ = std::max(0.05, battery_ - 0.01);
        return "arrived at shelf " + std::to_string(shelf);
    }
    if (function_name == "identify_vacancy_by_shelf") {
        require_arity(args, 1, "identify_vacancy_by_shelf");
        long long shelf = parse_integer_arg(args[0], "identify_vacancy_by_shelf");
        if (shelf < 1 || shelf > world_->n_shelves) {
            throw Error(ErrorCode::RangeError,
                        "shelf " + std::to_string(shelf) + " is outside [1, " +
                            std::to_string(world_->n_shelves) + "]");
        }
        std::string expected = "shelf_" + std::to_string(shelf);
        if (position != expected) {
            throw Error(ErrorCode::Precondition,
                        device_id_ + " is at " + position + ", not at " +
                            expected + "; move there before inspecting");
        }
        const auto& vacant = world_->vacancy.at(static_cast<int>(shelf));
        if (vacant.empty()) return "none";
        std::string joined;
        for (int id : vacant) {
            if (!joined.empty()) joined += ",";
            joined += std::to_string(id);
        }
        return joined;
    }
    if (function_name == "get_status") {
        require_arity(args, 0, "get_status");
        return "ok; battery " + fixed(battery_, 2) + "; position " + position;
    }
    if (function_name == "capture_image") {
        require_arity(args, 0, "capture_image");
        ++images_stored_;
        return "stored image_" + std::to_string(images_stored_) + ".jpg";
    }
    if (function_name == "return_to_base") {
        require_arity(args, 0, "return_to_base");
        position = "base";
        battery_ = std::max(0.05, battery_ - 0.01);
        return "docked at base";
    }
    if (function_name == "move_to_coordinates") {
        require_arity(args, 2, "move_to_coordinates");
        long long x = parse_integer_arg(args[0], "move_to_coordinates");
        long long y = parse_integer_arg(args[1], "move_to_coordinates");
        position = "grid_" + std::to_string(x) + "_" + std::to_string(y);
        battery_ = std::max(0.05, battery_ - 0.01);
        return "arrived at grid (" + std::to_string(x) + ", " +
               std::to_string(y) + ")";
    }
    throw Error(ErrorCode::Dispatch,
                device_id_ + " has no function '" + function_name + "'");
}

std::map<std::string, std::string> RobotDevice::attributes() const {
    std::lock_guard<std::mutex> lock(*world_->gate);
    return {{"battery", fixed(battery_, 2)},
            {"position", world_->robot_positions.at(device_id_)}};
}

// ---------------------------------------------------------------------------
// WiFi
// ---------------------------------------------------------------------------

const char* wifi_band_name(WifiBand band) {
    return band == WifiBand::Band2_4 ? "band_2_4" : "band_5";
}

std::optional<WifiBand> wifi_band_from_name(std::string_view name) {
    if (name == "band_2_4") return WifiBand::Band2_4;
    if (name == "band_5") return WifiBand::Band5;
    return std::nullopt;
}

WifiClientState* WifiWorld::find_client(const std::string& device_id) {
    for (auto& client : clients) {
        if (client.device_id == device_id) return &client;
    }
    return nullptr;
}

const WifiClientState* WifiWorld::find_client(const std::string& device_id) const {
    for (const auto& client : clients) {
        if (client.device_id == device_id) return &client;
    }
    return nullptr;
}

void WifiWorld::set_contention_window(const std::string& device_id,
                                      int log_cw_min, int log_cw_max) {
    auto* client = find_client(device_id);
    if (client == nullptr) {
        throw Error(ErrorCode::Identity, "no client '" + device_id + "'");
    }
    if (log_cw_min < 0 || log_cw_max > 15 || log_cw_min > log_cw_max) {
        throw Error(ErrorCode::Validation,
                    "contention window exponents (" + std::to_string(log_cw_min) +
                        ", " + std::to_string(log_cw_max) +
                        ") violate 0 <= min <= max <= 15");
    }
    client->log_cw_min = log_cw_min;
    client->log_cw_max = log_cw_max;
    invalidate_metrics();
}

void WifiWorld::set_band(const std::string& device_id, WifiBand band) {
    auto* client = find_client(device_id);
    if (client == nullptr) {
        throw Error(ErrorCode::Identity, "no client '" + device_id + "'");
    }
    client->band = band;
    invalidate_metrics();
}

void WifiWorld::set_interference(bool on) {
    interference_on = on;
    invalidate_metrics();
}

const std::map<std::string, WifiUploadMetrics>& WifiWorld::metrics() const {
    if (!metrics_cache_) metrics_cache_ = simulate_upload(*this);
    return *metrics_cache_;
}

void WifiWorld::invalidate_metrics() const { metrics_cache_.reset(); }

double compute_per(const WifiWorld& world, const WifiClientState& client) {
    double per = client.band == WifiBand::Band2_4 ? client.base_per_band_2_4
                                                  : client.base_per_band_5;
    if (world.interference_on && client.band == WifiBand::Band2_4) {
        per += world.interference_per_add;
    }
    return std::min(1.0, per);
}

std::map<std::string, WifiUploadMetrics> simulate_upload(const WifiWorld& world) {
    if (world.clients.empty()) {
        throw Error(ErrorCode::Validation, "no active clients to simulate");
    }
    const std::size_t n = world.clients.size();
    std::vector<double> sum_upload(n, 0.0);
    std::vector<double> sum_share(n, 0.0);

    for (int rep = 0; rep < world.replications; ++rep) {
        std::mt19937_64 rng(splitmix64(world.seed) ^
                            splitmix64(static_cast<std::uint64_t>(rep) + 1));
        std::vector<double> credited(n, 0.0);
        std::vector<double> airtime(n, 0.0);
        std::vector<double> done_at(n, -1.0);
        std::size_t pending = n;
        double now = 0.0;
        std::vector<std::size_t> winners;
        std::uint64_t cycles = 0;
        while (pending > 0) {
            if (++cycles > 400'000'000ull) {
                throw Error(ErrorCode::Config,
                            "contention model did not converge; check rates");
            }
            std::uint64_t best = ~0ull;
            winners.clear();
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t span =
                    (1ull << world.clients[i].log_cw_min) + 1ull;
                std::uint64_t draw = rng() % span;
                if (draw < best) {
                    best = draw;
                    winners.assign(1, i);
                } else if (draw == best) {
                    winners.push_back(i);
                }
            }
            std::size_t w = winners.size() == 1
                                ? winners.front()
                                : winners[rng() % winners.size()];
            const auto& client = world.clients[w];
            double tx = world.payload_bits / client.nominal_rate_bps +
                        world.overhead_s;
            now += static_cast<double>(best) * world.slot_time_s + tx;
            airtime[w] += tx;
            bool failed = unit_interval(rng) < client.retx_rate;
            if (!failed) {
                credited[w] += world.payload_bits;
                if (done_at[w] < 0.0 && credited[w] >= client.file_size_bits) {
                    done_at[w] = now;
                    --pending;
                }
            }
        }
        double total_airtime = 0.0;
        for (double a : airtime) total_airtime += a;
        for (std::size_t i = 0; i < n; ++i) {
            sum_upload[i] += done_at[i];
            sum_share[i] += airtime[i] / total_airtime;
        }
    }

    std::map<std::string, WifiUploadMetrics> result;
    for (std::size_t i = 0; i < n; ++i) {
        WifiUploadMetrics m;
        m.upload_time_s = sum_upload[i] / world.replications;
        m.airtime_share = sum_share[i] / world.replications;
        m.per = compute_per(world, world.clients[i]);
        result[world.clients[i].device_id] = m;
    }
    return result;
}

WifiWorld load_wifi_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) {
        throw Error(ErrorCode::Io, "cannot read config '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument,
                    "config '" + path + "' is not valid JSON at byte " +
                        std::to_string(e.byte));
    }
    try {
        WifiWorld world;
        world.seed = doc.value("seed", 0ull);
        world.slot_time_s = doc.value("slot_time_us", 0.1) * 1e-6;
        world.payload_bits = doc.value("payload_bits", 12000.0);
        world.overhead_s = doc.value("overhead_us", 100.0) * 1e-6;
        world.replications = doc.value("replications", 32);
        world.interference_on = doc.value("interference_on", false);
        world.interference_per_add = doc.value("interference_per_add", 0.0);
        if (doc.contains("known_aps")) {
            world.known_aps = doc["known_aps"].get<std::vector<std::string>>();
        }
        if (!doc.contains("clients") || !doc["clients"].is_array() ||
            doc["clients"].empty()) {
            throw Error(ErrorCode::Config,
                        "config '" + path + "' declares no clients");
        }
        for (const auto& c : doc["clients"]) {
            WifiClientState client;
            client.device_id = c.at("device_id").get<std::string>();
            client.profile_template = c.at("profile").get<std::string>();
            auto band = wifi_band_from_name(c.value("band", "band_2_4"));
            if (!band) {
                throw Error(ErrorCode::Config,
                            "unknown band '" + c.value("band", "") + "' for " +
                                client.device_id);
            }
            client.band = *band;
            client.log_cw_min = c.value("log_cw_min", 10);
            client.log_cw_max = c.value("log_cw_max", 15);
            if (client.log_cw_min < 0 || client.log_cw_max > 15 ||
                client.log_cw_min > client.log_cw_max) {
                throw Error(ErrorCode::Config,
                            "contention window exponents for " +
                                client.device_id +
                                " violate 0 <= min <= max <= 15");
            }
            client.nominal_rate_bps = c.at("nominal_rate_mbps").get<double>() * 1e6;
            if (client.nominal_rate_bps <= 0.0) {
                throw Error(ErrorCode::Config,
                            "nominal rate for " + client.device_id +
                                " must be positive");
            }
            client.retx_rate = c.value("retx_rate", 0.0);
            if (c.contains("base_per")) {
                client.base_per_band_2_4 = c["base_per"].value("band_2_4", 0.0);
                client.base_per_band_5 = c["base_per"].value("band_5", 0.0);
            }
            for (double fraction : {client.retx_rate, client.base_per_band_2_4,
                                    client.base_per_band_5}) {
                if (fraction < 0.0 || fraction > 1.0) {
                    throw Error(ErrorCode::Config,
                                "fractions for " + client.device_id +
                                    " must sit in [0, 1]");
                }
            }
            client.can_switch_band = c.value("can_switch_band", false);
            client.can_sense_interference =
                c.value("can_sense_interference", false);
            client.file_size_bits = c.value("file_size_bits", 32e6);
            client.mcs_index = c.value("mcs_index", 0);
            world.clients.push_back(std::move(client));
        }
        return world;
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config,
                    "config '" + path + "' is malformed: " + e.what());
    }
}

DeviceApiProfile load_wifi_template(const std::string& template_name) {
    if (template_name != "wifi_sdr" && template_name != "wifi_commercial") {
        throw Error(ErrorCode::Config,
                    "unknown NIC profile template '" + template_name + "'");
    }
    return load_profile_file(std::string(LLMIND_REPO_ROOT) + "/corpora/" +
                             template_name + ".json");
}

DeviceApiProfile make_wifi_profile(const DeviceApiProfile& template_profile,
                                   const std::string& device_id) {
    DeviceApiProfile profile = template_profile;
    profile.device_id = device_id;
    profile.version = 1;
    return profile;
}

WifiDevice::WifiDevice(WifiWorld& world, std::string device_id,
                       DeviceApiProfile profile)
    : world_(&world), device_id_(std::move(device_id)),
      profile_(std::move(profile)) {
    if (world_->find_client(device_id_) == nullptr) {
        throw Error(ErrorCode::Identity,
                    "world has no client '" + device_id_ + "'");
    }
}

std::string WifiDevice::device_id() const { return device_id_; }

const DeviceApiProfile& WifiDevice::profile() const { return profile_; }

std::string WifiDevice::call(const std::string& function_name,
                             const std::vector<std::string>& args) {
    if (profile_.find_function(function_name) == nullptr) {
        throw Error(ErrorCode::Dispatch,
                    device_id_ + " has no function '" + function_name + "'");
    }
    std::lock_guard<std::mutex> lock(*world_->gate);
    auto& client = *world_->find_client(device_id_);
    if (function_name == "set_contention_window") {
        require_arity(args, 2, "set_contention_window");
        long long lo = parse_integer_arg(args[0], "set_contention_window");
        long long hi = parse_integer_arg(args[1], "set_contention_window");
        world_->set_contention_window(device_id_, static_cast<int>(lo),
                                      static_cast<int>(hi));
        return "contention window exponents set to (" + std::to_string(lo) +
               ", " + std::to_string(hi) + ")";
    }
    if (function_name == "switch_band") {
        require_arity(args, 1, "switch_band");
        auto band = wifi_band_from_name(args[0]);
        if (!band) {
            throw Error(ErrorCode::Validation,
                        "unknown band '" + args[0] +
                            "'; expected band_2_4 or band_5");
        }
        if (!client.can_switch_band) {
            throw Error(ErrorCode::Capability,
                        device_id_ +
                            " cannot switch bands without rebooting its radio");
        }
        world_->set_band(device_id_, *band);
        return "switched to " + std::string(wifi_band_name(*band));
    }
    if (function_name == "get_known_aps") {
        require_arity(args, 0, "get_known_aps");
        if (world_->known_aps.empty()) return "none";
        std::string joined;
        for (const auto& ap : world_->known_aps) {
            if (!joined.empty()) joined += ", ";
            joined += ap;
        }
        return joined;
    }
    if (function_name == "get_link_metrics") {
        require_arity(args, 0, "get_link_metrics");
        const auto& m = world_->metrics().at(device_id_);
        return "upload_time_s " + fixed(m.upload_time_s, 2) +
               "; airtime_share " + fixed(m.airtime_share, 3) + "; per " +
               fixed(m.per, 3);
    }
    throw Error(ErrorCode::Dispatch,
                device_id_ + " does not implement '" + function_name + "'");
}

std::map<std::string, std::string> WifiDevice::attributes() const {
    std::lock_guard<std::mutex> lock(*world_->gate);
    const auto& client = *world_->find_client(device_id_);
    const auto& m = world_->metrics().at(device_id_);
    bool sensed = client.can_sense_interference && world_->interference_on;
    return {{"upload_time_s", fixed(m.upload_time_s, 2)},
            {"airtime_share", fixed(m.airtime_share, 3)},
            {"per", fixed(compute_per(*world_, client), 3)},
            {"mcs_index", std::to_string(client.mcs_index)},
            {"log_cw_min", std::to_string(client.log_cw_min)},
            {"log_cw_max", std::to_string(client.log_cw_max)},
            {"band", wifi_band_name(client.band)},
            {"interference_detected", sensed ? "true" : "false"}};
}

} // namespace llmind
