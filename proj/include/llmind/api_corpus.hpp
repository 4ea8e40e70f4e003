#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace llmind {

enum class ValueType { Integer, Decimal, String, Boolean };

const char* value_type_name(ValueType type);
std::optional<ValueType> value_type_from_name(std::string_view name);

// True if `value` parses as the given type ("26" under Integer, "12.5" under
// Decimal, "true"/"false" under Boolean; any text under String).
bool value_parses_as(std::string_view value, ValueType type);

enum class RoleHint { Normal, Init, Release };

struct ApiParameter {
    std::string name;
    ValueType value_type = ValueType::String;
    std::optional<std::pair<double, double>> range; // [min, max], numeric types only
    std::string units;
    std::string description;
};

struct ApiReturn {
    ValueType value_type = ValueType::String;
    std::string description;
};

// One callable function of a device. The description doubles as the
// retrieval text, so it must be non-empty.
struct ApiFunction {
    std::string name;
    std::string description;
    std::vector<ApiParameter> parameters;
    std::optional<ApiReturn> returns;
    RoleHint role_hint = RoleHint::Normal;
};

struct DeviceApiProfile {
    std::string device_id;
    std::string device_type;
    std::vector<ApiFunction> functions;
    std::uint64_t version = 0;

    const ApiFunction* find_function(std::string_view name) const;
    const ApiFunction* find_role(RoleHint hint) const;
};

// Retrieval unit: exactly one function per chunk. chunk_text is the canonical
// deterministic rendering used for embedding.
struct ApiChunk {
    ApiFunction function;
    std::string source_device;
    std::string chunk_text;
};

// Parses and validates one JSON profile document. Throws Error with
// MalformedDocument (carrying the byte offset) on parse failure and
// Validation on schema violations (duplicate function names, unknown
// value_type, inverted range, ...).
DeviceApiProfile load_profile(std::string_view raw);
DeviceApiProfile load_profile_file(const std::string& path);

// Canonical JSON rendering; load_profile(serialize_profile(p)) == p.
std::string serialize_profile(const DeviceApiProfile& profile);

// "name. description. parameters: p1 (d1); p2 (d2)" - stable per function.
std::string canonical_chunk_text(const ApiFunction& function);

std::vector<ApiChunk> chunk_profile(const DeviceApiProfile& profile);

// Adopts `update` iff it has a strictly newer version; equal or older
// versions leave `current` in place. Throws on device_id mismatch.
DeviceApiProfile apply_profile_update(const DeviceApiProfile& current,
                                      const DeviceApiProfile& update);

bool operator==(const ApiParameter& a, const ApiParameter& b);
bool operator==(const ApiReturn& a, const ApiReturn& b);
bool operator==(const ApiFunction& a, const ApiFunction& b);
bool operator==(const DeviceApiProfile& a, const DeviceApiProfile& b);

} // namespace llmind
