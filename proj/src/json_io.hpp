#pragma once

// JSON conversions shared by checkpoints and experiment configs.

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "tenevo/errors.hpp"
#include "tenevo/tnn.hpp"

namespace tenevo::detail {

using Json = nlohmann::ordered_json;

/// Throws ConfigError naming `where` if `obj` is not an object or holds a key
/// outside `allowed`.
inline void require_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || item.key() == k;
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
T get_or(const Json& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

inline Json interval_to_json(const Interval& iv) { return Json::array({iv.lo, iv.hi}); }

inline Interval interval_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(where + ": expected [lo, hi]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Json arch_to_json(const TnnArchitecture& a) {
    Json domain = Json::array();
    for (const auto& iv : a.domain) domain.push_back(interval_to_json(iv));
    return Json{{"dims", a.dims},
                {"rank", a.rank},
                {"hidden", a.hidden},
                {"activation", to_string(a.activation)},
                {"input_map", to_string(a.input_map.kind)},
                {"a", a.input_map.a},
                {"b", a.input_map.b},
                {"domain", domain}};
}

inline TnnArchitecture arch_from_json(const Json& j, const std::string& where) {
    require_keys(j, where, {"dims", "rank", "hidden", "activation", "input_map", "a", "b", "domain"});
    TnnArchitecture a;
    try {
        a.dims = j.at("dims").get<int>();
        a.rank = j.at("rank").get<int>();
        a.hidden = j.at("hidden").get<std::vector<int>>();
        a.activation = activation_from_string(j.at("activation").get<std::string>());
        a.input_map.kind = input_map_from_string(j.at("input_map").get<std::string>());
        a.input_map.a = j.at("a").get<double>();
        a.input_map.b = j.at("b").get<double>();
        for (const auto& iv : j.at("domain")) a.domain.push_back(interval_from_json(iv, where + ".domain"));
        a.validate();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return a;
}

} // namespace tenevo::detail
