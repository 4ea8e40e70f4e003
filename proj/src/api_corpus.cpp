#include "llmind/api_corpus.hpp"

#include "json_codec.hpp"
#include "llmind/errors.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace llmind {

namespace {

using nlohmann::ordered_json;

RoleHint role_hint_from_name(const std::string& name) {
    if (name == "normal") return RoleHint::Normal;
    if (name == "init") return RoleHint::Init;
    if (name == "release") return RoleHint::Release;
    throw Error(ErrorCode::Validation, "unknown role_hint '" + name + "'");
}

const char* role_hint_name(RoleHint hint) {
    switch (hint) {
        case RoleHint::Normal: return "normal";
        case RoleHint::Init: return "init";
        case RoleHint::Release: return "release";
    }
    return "normal";
}

ValueType parse_value_type(const ordered_json& j, const std::string& where) {
    const std::string name = j.get<std::string>();
    auto vt = value_type_from_name(name);
    if (!vt) {
        throw Error(ErrorCode::Validation,
                    "unknown value_type '" + name + "' in " + where);
    }
    return *vt;
}

ApiParameter parse_parameter(const ordered_json& j, const std::string& fn_name) {
    ApiParameter p;
    p.name = j.at("name").get<std::string>();
    if (p.name.empty()) {
        throw Error(ErrorCode::Validation,
                    "empty parameter name in function '" + fn_name + "'");
    }
    p.value_type = parse_value_type(j.at("value_type"),
                                    "parameter '" + p.name + "' of '" + fn_name + "'");
    if (j.contains("range") && !j.at("range").is_null()) {
        const auto& r = j.at("range");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
            throw Error(ErrorCode::Validation,
                        "range of '" + p.name + "' must be [min, max]");
        }
        double lo = r[0].get<double>();
        double hi = r[1].get<double>();
        if (lo > hi) {
            throw Error(ErrorCode::Validation,
                        "range of '" + p.name + "' has min > max");
        }
        if (p.value_type != ValueType::Integer && p.value_type != ValueType::Decimal) {
            throw Error(ErrorCode::Validation,
                        "range on non-numeric parameter '" + p.name + "'");
        }
        p.range = {lo, hi};
    }
    if (j.contains("units")) p.units = j.at("units").get<std::string>();
    if (j.contains("description")) p.description = j.at("description").get<std::string>();
    return p;
}

ApiFunction parse_function(const ordered_json& j) {
    ApiFunction f;
    f.name = j.at("name").get<std::string>();
    if (f.name.empty()) throw Error(ErrorCode::Validation, "empty function name");
    f.description = j.at("description").get<std::string>();
    if (f.description.empty()) {
        throw Error(ErrorCode::Validation,
                    "function '" + f.name + "' has an empty description");
    }
    if (j.contains("parameters")) {
        std::set<std::string> seen;
        for (const auto& pj : j.at("parameters")) {
            ApiParameter p = parse_parameter(pj, f.name);
            if (!seen.insert(p.name).second) {
                throw Error(ErrorCode::Validation,
                            "duplicate parameter '" + p.name + "' in '" + f.name + "'");
            }
            f.parameters.push_back(std::move(p));
        }
    }
    if (j.contains("returns") && !j.at("returns").is_null()) {
        ApiReturn r;
        r.value_type = parse_value_type(j.at("returns").at("value_type"),
                                        "returns of '" + f.name + "'");
        if (j.at("returns").contains("description")) {
            r.description = j.at("returns").at("description").get<std::string>();
        }
        f.returns = std::move(r);
    }
    if (j.contains("role_hint")) {
        f.role_hint = role_hint_from_name(j.at("role_hint").get<std::string>());
    }
    return f;
}

} // namespace

namespace jsoncodec {

DeviceApiProfile profile_from_json(const ordered_json& doc) {
    try {
        DeviceApiProfile profile;
        profile.device_id = doc.at("device_id").get<std::string>();
        if (profile.device_id.empty()) {
            throw Error(ErrorCode::Validation, "empty device_id");
        }
        if (doc.contains("device_type")) {
            profile.device_type = doc.at("device_type").get<std::string>();
        }
        if (doc.contains("version")) {
            profile.version = doc.at("version").get<std::uint64_t>();
        }
        std::set<std::string> names;
        for (const auto& fj : doc.at("functions")) {
            ApiFunction f = parse_function(fj);
            if (!names.insert(f.name).second) {
                throw Error(ErrorCode::Validation,
                            "duplicate function name '" + f.name + "'");
            }
            profile.functions.push_back(std::move(f));
        }
        return profile;
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Validation, e.what());
    }
}

ordered_json profile_to_json(const DeviceApiProfile& profile) {
    ordered_json doc;
    doc["device_id"] = profile.device_id;
    doc["device_type"] = profile.device_type;
    doc["version"] = profile.version;
    doc["functions"] = ordered_json::array();
    for (const auto& f : profile.functions) {
        ordered_json fj;
        fj["name"] = f.name;
        fj["description"] = f.description;
        fj["parameters"] = ordered_json::array();
        for (const auto& p : f.parameters) {
            ordered_json pj;
            pj["name"] = p.name;
            pj["value_type"] = value_type_name(p.value_type);
            if (p.range) pj["range"] = {p.range->first, p.range->second};
            if (!p.units.empty()) pj["units"] = p.units;
            pj["description"] = p.description;
            fj["parameters"].push_back(std::move(pj));
        }
        if (f.returns) {
            fj["returns"] = {{"value_type", value_type_name(f.returns->value_type)},
                             {"description", f.returns->description}};
        }
        if (f.role_hint != RoleHint::Normal) {
            fj["role_hint"] = role_hint_name(f.role_hint);
        }
        doc["functions"].push_back(std::move(fj));
    }
    return doc;
}

} // namespace jsoncodec

const char* value_type_name(ValueType type) {
    switch (type) {
        case ValueType::Integer: return "integer";
        case ValueType::Decimal: return "decimal";
        case ValueType::String: return "string";
        case ValueType::Boolean: return "boolean";
    }
    return "string";
}

std::optional<ValueType> value_type_from_name(std::string_view name) {
    if (name == "integer") return ValueType::Integer;
    if (name == "decimal") return ValueType::Decimal;
    if (name == "string") return ValueType::String;
    if (name == "boolean") return ValueType::Boolean;
    return std::nullopt;
}

bool value_parses_as(std::string_view value, ValueType type) {
    switch (type) {
        case ValueType::String:
            return true;
        case ValueType::Boolean:
            return value == "true" || value == "false";
        case ValueType::Integer: {
            if (value.empty()) return false;
            std::size_t i = value[0] == '-' ? 1 : 0;
            if (i == value.size()) return false;
            for (; i < value.size(); ++i) {
                if (value[i] < '0' || value[i] > '9') return false;
            }
            return true;
        }
        case ValueType::Decimal: {
            if (value.empty()) return false;
            double out = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
            return ec == std::errc() && ptr == value.data() + value.size();
        }
    }
    return false;
}

const ApiFunction* DeviceApiProfile::find_function(std::string_view name) const {
    for (const auto& f : functions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

const ApiFunction* DeviceApiProfile::find_role(RoleHint hint) const {
    for (const auto& f : functions) {
        if (f.role_hint == hint) return &f;
    }
    return nullptr;
}

DeviceApiProfile load_profile(std::string_view raw) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument,
                    std::string(e.what()) + " (byte " + std::to_string(e.byte) + ")");
    }
    return jsoncodec::profile_from_json(doc);
}

DeviceApiProfile load_profile_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open profile file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_profile(buf.str());
}

std::string serialize_profile(const DeviceApiProfile& profile) {
    return jsoncodec::profile_to_json(profile).dump(2) + "\n";
}

std::string canonical_chunk_text(const ApiFunction& function) {
    std::string text = function.name + ". " + function.description;
    while (!text.empty() && text.back() == '.') text.pop_back();
    text += '.';
    if (!function.parameters.empty()) {
        text += " parameters:";
        bool first = true;
        for (const auto& p : function.parameters) {
            text += first ? " " : "; ";
            first = false;
            text += p.name + " (" + p.description + ")";
        }
    }
    return text;
}

std::vector<ApiChunk> chunk_profile(const DeviceApiProfile& profile) {
    std::vector<ApiChunk> chunks;
    chunks.reserve(profile.functions.size());
    for (const auto& f : profile.functions) {
        chunks.push_back({f, profile.device_id, canonical_chunk_text(f)});
    }
    return chunks;
}

DeviceApiProfile apply_profile_update(const DeviceApiProfile& current,
                                      const DeviceApiProfile& update) {
    if (current.device_id != update.device_id) {
        throw Error(ErrorCode::Identity,
                    "profile update for '" + update.device_id +
                        "' applied to '" + current.device_id + "'");
    }
    return update.version > current.version ? update : current;
}

bool operator==(const ApiParameter& a, const ApiParameter& b) {
    return a.name == b.name && a.value_type == b.value_type && a.range == b.range &&
           a.units == b.units && a.description == b.description;
}

bool operator==(const ApiReturn& a, const ApiReturn& b) {
    return a.value_type == b.value_type && a.description == b.description;
}

bool operator==(const ApiFunction& a, const ApiFunction& b) {
    return a.name == b.name && a.description == b.description &&
           a.parameters == b.parameters && a.returns == b.returns &&
           a.role_hint == b.role_hint;
}

bool operator==(const DeviceApiProfile& a, const DeviceApiProfile& b) {
    return a.device_id == b.device_id && a.device_type == b.device_type &&
           a.functions == b.functions && a.version == b.version;
}

} // namespace llmind
