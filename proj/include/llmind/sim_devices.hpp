#pragma once

#include "llmind/api_corpus.hpp"
#include "llmind/fsm_executor.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace llmind {

// ---------------------------------------------------------------------------
// Warehouse world
// ---------------------------------------------------------------------------

/// Seeded shelf world. Every shelf has 10 positions; a position is vacant
/// with probability 0.3, drawn once from the seed. Robots start at "base"
/// and occupy "shelf_<k>" or "grid_<x>_<y>" after moving.
struct WarehouseWorld {
    int n_shelves = 0;
    std::uint64_t seed = 0;
    std::map<int, std::vector<int>> vacancy;            // shelf -> vacant position ids
    std::map<std::string, std::string> robot_positions; // robot -> location label

    // Serializes access when several device threads share the world; device
    // wrappers lock it around calls and snapshots, and a harness must hold
    // it across direct mutations. Copies share the gate.
    std::shared_ptr<std::mutex> gate = std::make_shared<std::mutex>();
};

WarehouseWorld make_warehouse_world(int n_shelves, std::uint64_t seed);

/// The shipped warehouse robot corpus (corpora/robot.json).
DeviceApiProfile load_robot_template();

/// Stamps a template with a concrete device identity and clamps every
/// shelf_id parameter range to [1, n_shelves].
DeviceApiProfile make_robot_profile(const DeviceApiProfile& template_profile,
                                    const std::string& device_id, int n_shelves);

/// One mobile robot bound to a shared world. Calls mutate world state
/// (position) and per-device state (battery, image counter).
class RobotDevice : public DeviceHandle {
public:
    RobotDevice(WarehouseWorld& world, std::string device_id,
                DeviceApiProfile profile);

    std::string device_id() const override;
    const DeviceApiProfile& profile() const override;
    std::string call(const std::string& function_name,
                     const std::vector<std::string>& args) override;
    std::map<std::string, std::string> attributes() const override;

private:
    WarehouseWorld* world_;
    std::string device_id_;
    DeviceApiProfile profile_;
    double battery_ = 1.0;
    int images_stored_ = 0;
};

// ---------------------------------------------------------------------------
// WiFi world
// ---------------------------------------------------------------------------

enum class WifiBand { Band2_4, Band5 };

const char* wifi_band_name(WifiBand band); // "band_2_4" / "band_5"
std::optional<WifiBand> wifi_band_from_name(std::string_view name);

struct WifiClientState {
    std::string device_id;
    std::string profile_template; // "wifi_sdr" | "wifi_commercial"
    WifiBand band = WifiBand::Band2_4;
    int log_cw_min = 10;
    int log_cw_max = 15;
    double nominal_rate_bps = 0.0;
    double retx_rate = 0.0;        // fraction of transmissions lost
    double base_per_band_2_4 = 0.0;
    double base_per_band_5 = 0.0;
    bool can_switch_band = false;
    bool can_sense_interference = false;
    double file_size_bits = 32e6;
    int mcs_index = 0;
};

struct WifiUploadMetrics {
    double upload_time_s = 0.0;
    double airtime_share = 0.0;
    double per = 0.0;
};

/// Shared radio medium. Mutate client state through the set_* methods (or
/// device calls, which use them) so the cached upload metrics stay fresh;
/// direct field writes must be followed by invalidate_metrics().
struct WifiWorld {
    std::vector<WifiClientState> clients;
    bool interference_on = false;      // degrades band_2_4 only
    double interference_per_add = 0.0; // PER added to 2.4 GHz while on
    double slot_time_s = 1e-7;
    double payload_bits = 12000.0;
    double overhead_s = 100e-6;
    std::uint64_t seed = 0;
    int replications = 32;
    std::vector<std::string> known_aps;

    // Serializes access when several device threads share the medium; device
    // wrappers lock it around calls and snapshots, and a harness must hold
    // it across direct mutations. Copies share the gate.
    std::shared_ptr<std::mutex> gate = std::make_shared<std::mutex>();

    WifiClientState* find_client(const std::string& device_id);
    const WifiClientState* find_client(const std::string& device_id) const;

    void set_contention_window(const std::string& device_id, int log_cw_min,
                               int log_cw_max);
    void set_band(const std::string& device_id, WifiBand band);
    void set_interference(bool on);

    /// Upload metrics for the current configuration, computed lazily and
    /// cached until the next mutation.
    const std::map<std::string, WifiUploadMetrics>& metrics() const;
    void invalidate_metrics() const;

private:
    mutable std::optional<std::map<std::string, WifiUploadMetrics>> metrics_cache_;
};

/// Loads a scenario config (config/wifi_scenario*.json). Unknown top-level
/// keys are ignored so scenario scripts can ride in the same file.
WifiWorld load_wifi_config(const std::string& path);

/// PER currently seen by `client`: its band's base rate, plus the
/// interference addend when the source is on and the client sits on 2.4 GHz,
/// clipped to 1.
double compute_per(const WifiWorld& world, const WifiClientState& client);

/// Contention-cycle upload model. Every active client draws a backoff
/// uniformly from [0, 2^log_cw_min] slots; the smallest draw transmits one
/// payload (ties decided uniformly); a transmission fails with probability
/// retx_rate, consuming airtime without crediting bits. Clients transmit
/// back-to-back files; upload_time_s is when a client's first file_size_bits
/// are credited, airtime_share its fraction of all transmit airtime until
/// the last client finishes its first file. Results are averaged over
/// `replications` derived-seed runs and are deterministic given the seed.
std::map<std::string, WifiUploadMetrics> simulate_upload(const WifiWorld& world);

/// The shipped NIC corpora (corpora/wifi_sdr.json, corpora/wifi_commercial.json).
DeviceApiProfile load_wifi_template(const std::string& template_name);

DeviceApiProfile make_wifi_profile(const DeviceApiProfile& template_profile,
                                   const std::string& device_id);

/// One NIC bound to a shared radio world.
class WifiDevice : public DeviceHandle {
public:
    WifiDevice(WifiWorld& world, std::string device_id, DeviceApiProfile profile);

    std::string device_id() const override;
    const DeviceApiProfile& profile() const override;
    std::string call(const std::string& function_name,
                     const std::vector<std::string>& args) override;
    std::map<std::string, std::string> attributes() const override;

private:
    WifiWorld* world_;
    std::string device_id_;
    DeviceApiProfile profile_;
};

} // namespace llmind
