#pragma once

// Loading TDL profiles from YAML files. Requires yaml-cpp.

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <set>
#include <string>

#include "ffeq/error.hpp"
#include "ffeq/tdl.hpp"

namespace ffeq {

namespace detail {

inline int yaml_line(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// Rejects keys of a mapping that are not in `allowed`.
inline void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
    if (!map.IsMap()) throw ConfigError(where + ": expected a mapping", yaml_line(map));
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'", yaml_line(kv.first));
    }
}

template <class T>
T yaml_get(const YAML::Node& map, const std::string& key, const std::string& where) {
    const YAML::Node v = map[key];
    if (!v) throw ConfigError(where + ": missing key '" + key + "'", yaml_line(map));
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'", yaml_line(v));
    }
}

}  // namespace detail

inline TdlProfile parse_profile(const YAML::Node& root, const std::string& origin = "profile") {
    detail::check_keys(root, {"name", "los", "rician_k_db", "d_max_s", "taps"}, origin);
    TdlProfile p;
    p.name = detail::yaml_get<std::string>(root, "name", origin);
    p.los = root["los"] ? detail::yaml_get<bool>(root, "los", origin) : false;
    if (root["rician_k_db"]) p.rician_k_db = detail::yaml_get<double>(root, "rician_k_db", origin);
    p.d_max_s = detail::yaml_get<double>(root, "d_max_s", origin);
    const YAML::Node taps = root["taps"];
    if (!taps || !taps.IsSequence()) throw ConfigError(origin + ": 'taps' must be a list", detail::yaml_line(root));
    for (const auto& t : taps) {
        detail::check_keys(t, {"delay_norm", "power_db"}, origin + " tap");
        p.taps.push_back({detail::yaml_get<double>(t, "delay_norm", origin), detail::yaml_get<double>(t, "power_db", origin)});
    }
    try {
        p.finalize();
    } catch (const ConfigError& e) {
        throw ConfigError(e.message(), detail::yaml_line(root));
    }
    return p;
}

inline TdlProfile load_profile(const std::filesystem::path& file) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(file.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError("cannot open profile file " + file.string());
    } catch (const YAML::ParserException& e) {
        throw ConfigError(file.string() + ": " + e.msg, e.mark.line + 1);
    }
    return parse_profile(root, file.string());
}

#ifdef FFEQ_PROFILE_DIR
inline std::filesystem::path default_profile_dir() { return FFEQ_PROFILE_DIR; }
#else
inline std::filesystem::path default_profile_dir() { return "data/profiles"; }
#endif

/// Loads `<dir>/<name>.yaml`.
inline TdlProfile load_profile_by_name(const std::string& name, const std::filesystem::path& dir = default_profile_dir()) {
    const auto file = dir / (name + ".yaml");
    if (!std::filesystem::exists(file))
        throw ConfigError("unknown profile '" + name + "' (looked for " + file.string() + ")");
    return load_profile(file);
}

}  // namespace ffeq
