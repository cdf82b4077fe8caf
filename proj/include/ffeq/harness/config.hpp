#pragma once

// Experiment configuration: YAML loading with line-addressed errors and the
// grid derivation from physical parameters.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ffeq/channel.hpp"
#include "ffeq/equalizer.hpp"
#include "ffeq/error.hpp"
#include "ffeq/modem.hpp"
#include "ffeq/profile_io.hpp"
#include "ffeq/tdl.hpp"

namespace ffeq::harness {

inline constexpr double kSpeedOfLight = 3e8;  // m/s, as in the usual f_max = f_c v / c tables
inline constexpr double kAutoTolerance = 1e-3;  // relative agreement of redundant grid quantities

/// Name of the built-in static single-tap channel.
inline constexpr const char* kAwgnProfile = "awgn";

enum class Propagation { Matrix, Waveform };

struct GridSpec {
    Index M = 64;
    Index N = 16;
    // Any non-empty subset may be given; all must agree.
    std::optional<double> d_r_s;
    std::optional<double> bandwidth_hz;
    std::optional<double> subcarrier_spacing_hz;
    std::optional<double> symbol_duration_s;
    std::optional<double> doppler_resolution_hz;
    Index cp = -1;  // -1: L_max
};

struct SnrSweep {
    double start_db = 0.0;
    double stop_db = 16.0;
    double step_db = 2.0;

    std::vector<double> points() const {
        std::vector<double> out;
        const auto count = static_cast<long>(std::floor((stop_db - start_db) / step_db + 1e-9)) + 1;
        for (long i = 0; i < count; ++i) out.push_back(start_db + static_cast<double>(i) * step_db);
        return out;
    }
};

struct TrialSpec {
    Index max_realizations = 200;
    Index min_realizations = 1;
    Index target_bit_errors = 200;  // 0: always run max_realizations
    Index frames_per_realization = 1;
    Index chunk = 8;                // realizations between stopping checks
};

struct EqualizerSpec {
    Domain domain = Domain::Frequency;
    bool banded = true;
    Index stripe_k = -1;          // -1: K_max
    double max_discarded = 0.1;   // tolerated stripe truncation, fraction of ||H_nu||^2
    bool one_tap_baseline = false;
};

struct CsiSpec {
    bool enabled = false;
    double c = 1.0;
};

struct ExperimentConfig {
    GridSpec grid;
    std::string profile = "tdl-d";
    DopplerMode doppler_mode = DopplerMode::OnGrid;
    std::optional<double> f_max_hz;
    std::optional<double> v_max_kmh;
    std::optional<double> carrier_hz;
    std::vector<Scheme> schemes{Scheme::Otfs, Scheme::Ofdm, Scheme::Scfde};
    SnrSweep snr;
    TrialSpec trials;
    EqualizerSpec equalizer;
    CsiSpec csi;
    Propagation propagation = Propagation::Matrix;
    bool theory = true;
    std::uint64_t seed = 1;
    std::string output;

    // Not part of the file format.
    std::filesystem::path profile_dir = default_profile_dir();
    unsigned threads = 1;
    std::map<std::string, int> lines;  // dotted key -> source line, for messages

    int line_of(const std::string& key) const {
        const auto it = lines.find(key);
        return it == lines.end() ? 0 : it->second;
    }

    bool awgn() const { return profile == kAwgnProfile; }

    /// f_max from either f_max_hz or v_max and the carrier; both forms must
    /// agree when given together.
    double f_max() const {
        std::optional<double> from_speed;
        if (v_max_kmh || carrier_hz) {
            if (!v_max_kmh || !carrier_hz)
                throw ConfigError("channel: v_max_kmh and carrier_hz must be given together",
                                  line_of(v_max_kmh ? "channel.v_max_kmh" : "channel.carrier_hz"));
            from_speed = *carrier_hz * (*v_max_kmh / 3.6) / kSpeedOfLight;
        }
        if (f_max_hz && from_speed) {
            if (std::abs(*f_max_hz - *from_speed) > kAutoTolerance * std::max(1.0, *from_speed))
                throw ConfigError("channel: f_max_hz " + std::to_string(*f_max_hz) + " conflicts with v_max_kmh and " +
                                      "carrier_hz (" + std::to_string(*from_speed) + " Hz)",
                                  line_of("channel.f_max_hz"));
            return *f_max_hz;
        }
        if (f_max_hz) return *f_max_hz;
        if (from_speed) return *from_speed;
        return 0.0;
    }
};

namespace detail {

using ffeq::detail::check_keys;
using ffeq::detail::yaml_get;
using ffeq::detail::yaml_line;

inline void note_line(ExperimentConfig& cfg, const YAML::Node& map, const std::string& key, const std::string& path) {
    if (map[key]) cfg.lines[path] = yaml_line(map[key]);
}

// Integer or the word "auto" (returned as -1).
inline Index auto_or_index(const YAML::Node& map, const std::string& key, const std::string& where, Index fallback) {
    const YAML::Node v = map[key];
    if (!v) return fallback;
    if (v.IsScalar() && v.Scalar() == "auto") return -1;
    const auto i = yaml_get<long long>(map, key, where);
    if (i < 0) throw ConfigError(where + ": '" + key + "' must be non-negative or auto", yaml_line(v));
    return static_cast<Index>(i);
}

inline std::optional<double> optional_positive(const YAML::Node& map, const std::string& key, const std::string& where) {
    if (!map[key]) return std::nullopt;
    const auto v = yaml_get<double>(map, key, where);
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(where + ": '" + key + "' must be positive", yaml_line(map[key]));
    return v;
}

inline Index positive_index(const YAML::Node& map, const std::string& key, const std::string& where, Index fallback,
                            Index min_value = 1) {
    if (!map[key]) return fallback;
    const auto v = yaml_get<long long>(map, key, where);
    if (v < min_value)
        throw ConfigError(where + ": '" + key + "' must be at least " + std::to_string(min_value), yaml_line(map[key]));
    return static_cast<Index>(v);
}

template <class F>
auto enum_value(const YAML::Node& map, const std::string& key, const std::string& where, F parse) {
    const auto text = yaml_get<std::string>(map, key, where);
    try {
        return parse(text);
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.message(), yaml_line(map[key]));
    }
}

inline DopplerMode parse_doppler_mode(const std::string& s) {
    if (s == "continuous") return DopplerMode::Continuous;
    if (s == "on-grid" || s == "on_grid" || s == "ongrid") return DopplerMode::OnGrid;
    throw ConfigError("unknown doppler_mode '" + s + "' (continuous | on-grid)");
}

inline Domain parse_domain(const std::string& s) {
    if (s == "frequency") return Domain::Frequency;
    if (s == "time") return Domain::Time;
    throw ConfigError("unknown domain '" + s + "' (time | frequency)");
}

inline Propagation parse_propagation(const std::string& s) {
    if (s == "matrix") return Propagation::Matrix;
    if (s == "waveform") return Propagation::Waveform;
    throw ConfigError("unknown propagation '" + s + "' (matrix | waveform)");
}

inline void parse_grid(ExperimentConfig& cfg, const YAML::Node& g) {
    const std::string w = "grid";
    check_keys(g, {"M", "N", "d_r_s", "bandwidth_hz", "subcarrier_spacing_hz", "symbol_duration_s",
                   "doppler_resolution_hz", "cp"},
               w);
    cfg.grid.M = positive_index(g, "M", w, cfg.grid.M);
    cfg.grid.N = positive_index(g, "N", w, cfg.grid.N);
    cfg.grid.d_r_s = optional_positive(g, "d_r_s", w);
    cfg.grid.bandwidth_hz = optional_positive(g, "bandwidth_hz", w);
    cfg.grid.subcarrier_spacing_hz = optional_positive(g, "subcarrier_spacing_hz", w);
    cfg.grid.symbol_duration_s = optional_positive(g, "symbol_duration_s", w);
    cfg.grid.doppler_resolution_hz = optional_positive(g, "doppler_resolution_hz", w);
    cfg.grid.cp = auto_or_index(g, "cp", w, cfg.grid.cp);
    for (const char* k : {"M", "N", "d_r_s", "bandwidth_hz", "subcarrier_spacing_hz", "symbol_duration_s",
                          "doppler_resolution_hz", "cp"})
        note_line(cfg, g, k, w + "." + k);
}

inline void parse_channel(ExperimentConfig& cfg, const YAML::Node& c) {
    const std::string w = "channel";
    check_keys(c, {"profile", "doppler_mode", "f_max_hz", "v_max_kmh", "carrier_hz"}, w);
    if (c["profile"]) cfg.profile = yaml_get<std::string>(c, "profile", w);
    if (c["doppler_mode"]) cfg.doppler_mode = enum_value(c, "doppler_mode", w, parse_doppler_mode);
    if (c["f_max_hz"]) {
        cfg.f_max_hz = yaml_get<double>(c, "f_max_hz", w);
        if (*cfg.f_max_hz < 0.0) throw ConfigError(w + ": 'f_max_hz' must be non-negative", yaml_line(c["f_max_hz"]));
    }
    if (c["v_max_kmh"]) {
        cfg.v_max_kmh = yaml_get<double>(c, "v_max_kmh", w);
        if (*cfg.v_max_kmh < 0.0) throw ConfigError(w + ": 'v_max_kmh' must be non-negative", yaml_line(c["v_max_kmh"]));
    }
    cfg.carrier_hz = optional_positive(c, "carrier_hz", w);
    for (const char* k : {"profile", "doppler_mode", "f_max_hz", "v_max_kmh", "carrier_hz"})
        note_line(cfg, c, k, w + "." + k);
}

inline void parse_schemes(ExperimentConfig& cfg, const YAML::Node& s) {
    if (!s.IsSequence() || s.size() == 0) throw ConfigError("schemes: expected a non-empty list", yaml_line(s));
    cfg.schemes.clear();
    for (const auto& item : s) {
        Scheme sc;
        try {
            sc = parse_scheme(item.as<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError("schemes: " + e.message(), yaml_line(item));
        } catch (const YAML::Exception&) {
            throw ConfigError("schemes: expected a scheme name", yaml_line(item));
        }
        for (auto have : cfg.schemes)
            if (have == sc) throw ConfigError("schemes: duplicate entry", yaml_line(item));
        cfg.schemes.push_back(sc);
    }
}

inline void parse_snr(ExperimentConfig& cfg, const YAML::Node& s) {
    const std::string w = "snr_db";
    check_keys(s, {"start", "stop", "step"}, w);
    if (s["start"]) cfg.snr.start_db = yaml_get<double>(s, "start", w);
    if (s["stop"]) cfg.snr.stop_db = yaml_get<double>(s, "stop", w);
    if (s["step"]) cfg.snr.step_db = yaml_get<double>(s, "step", w);
    if (!(cfg.snr.step_db > 0.0)) throw ConfigError(w + ": 'step' must be positive", yaml_line(s["step"] ? s["step"] : s));
    if (cfg.snr.stop_db < cfg.snr.start_db)
        throw ConfigError(w + ": 'stop' is below 'start'", yaml_line(s["stop"] ? s["stop"] : s));
}

inline void parse_trials(ExperimentConfig& cfg, const YAML::Node& t) {
    const std::string w = "trials";
    check_keys(t, {"max_realizations", "min_realizations", "target_bit_errors", "frames_per_realization", "chunk"}, w);
    auto& tr = cfg.trials;
    tr.max_realizations = positive_index(t, "max_realizations", w, tr.max_realizations);
    tr.min_realizations = positive_index(t, "min_realizations", w, tr.min_realizations);
    tr.target_bit_errors = positive_index(t, "target_bit_errors", w, tr.target_bit_errors, 0);
    tr.frames_per_realization = positive_index(t, "frames_per_realization", w, tr.frames_per_realization);
    tr.chunk = positive_index(t, "chunk", w, tr.chunk);
    if (tr.min_realizations > tr.max_realizations)
        throw ConfigError(w + ": 'min_realizations' exceeds 'max_realizations'", yaml_line(t["min_realizations"]));
}

inline void parse_equalizer(ExperimentConfig& cfg, const YAML::Node& e) {
    const std::string w = "equalizer";
    check_keys(e, {"domain", "banded", "stripe_k", "max_discarded", "one_tap_baseline"}, w);
    auto& eq = cfg.equalizer;
    if (e["domain"]) eq.domain = enum_value(e, "domain", w, parse_domain);
    if (e["banded"]) eq.banded = yaml_get<bool>(e, "banded", w);
    eq.stripe_k = auto_or_index(e, "stripe_k", w, eq.stripe_k);
    if (e["max_discarded"]) {
        eq.max_discarded = yaml_get<double>(e, "max_discarded", w);
        if (!(eq.max_discarded >= 0.0 && eq.max_discarded <= 1.0))
            throw ConfigError(w + ": 'max_discarded' must lie in [0, 1]", yaml_line(e["max_discarded"]));
    }
    if (e["one_tap_baseline"]) eq.one_tap_baseline = yaml_get<bool>(e, "one_tap_baseline", w);
    note_line(cfg, e, "stripe_k", w + ".stripe_k");
}

inline void parse_csi(ExperimentConfig& cfg, const YAML::Node& c) {
    const std::string w = "imperfect_csi";
    check_keys(c, {"enabled", "c"}, w);
    if (c["enabled"]) cfg.csi.enabled = yaml_get<bool>(c, "enabled", w);
    if (c["c"]) {
        cfg.csi.c = yaml_get<double>(c, "c", w);
        if (!(cfg.csi.c >= 0.0)) throw ConfigError(w + ": 'c' must be non-negative", yaml_line(c["c"]));
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const YAML::Node& root) {
    using namespace detail;
    if (!root || root.IsNull()) throw ConfigError("config: empty document");
    check_keys(root, {"grid", "channel", "schemes", "snr_db", "trials", "equalizer", "imperfect_csi", "propagation",
                      "theory", "seed", "output"},
               "config");
    ExperimentConfig cfg;
    if (root["grid"]) parse_grid(cfg, root["grid"]);
    if (root["channel"]) parse_channel(cfg, root["channel"]);
    if (root["schemes"]) parse_schemes(cfg, root["schemes"]);
    if (root["snr_db"]) parse_snr(cfg, root["snr_db"]);
    if (root["trials"]) parse_trials(cfg, root["trials"]);
    if (root["equalizer"]) parse_equalizer(cfg, root["equalizer"]);
    if (root["imperfect_csi"]) parse_csi(cfg, root["imperfect_csi"]);
    if (root["propagation"]) cfg.propagation = enum_value(root, "propagation", "config", parse_propagation);
    if (root["theory"]) cfg.theory = yaml_get<bool>(root, "theory", "config");
    if (root["seed"]) cfg.seed = yaml_get<std::uint64_t>(root, "seed", "config");
    if (root["output"]) cfg.output = yaml_get<std::string>(root, "output", "config");
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    try {
        return parse_config(YAML::Load(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("config: ") + e.msg, e.mark.line + 1);
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(file.string() + ": " + e.message(), e.line());
    }
}

/// Delay resolution from whichever grid quantities were given. Every given
/// quantity must imply the same d_r.
inline double resolve_delay_resolution(const ExperimentConfig& cfg) {
    const auto& g = cfg.grid;
    const double m = static_cast<double>(g.M);
    const double mn = static_cast<double>(g.M * g.N);
    struct Candidate {
        const char* key;
        double d_r;
    };
    std::vector<Candidate> c;
    if (g.d_r_s) c.push_back({"d_r_s", *g.d_r_s});
    if (g.bandwidth_hz) c.push_back({"bandwidth_hz", 1.0 / *g.bandwidth_hz});
    if (g.subcarrier_spacing_hz) c.push_back({"subcarrier_spacing_hz", 1.0 / (m * *g.subcarrier_spacing_hz)});
    if (g.symbol_duration_s) c.push_back({"symbol_duration_s", *g.symbol_duration_s / m});
    if (g.doppler_resolution_hz) c.push_back({"doppler_resolution_hz", 1.0 / (mn * *g.doppler_resolution_hz)});
    if (c.empty())
        throw ConfigError("grid: give one of d_r_s, bandwidth_hz, subcarrier_spacing_hz, symbol_duration_s, "
                          "doppler_resolution_hz");
    for (std::size_t i = 1; i < c.size(); ++i)
        if (std::abs(c[i].d_r - c[0].d_r) > kAutoTolerance * c[0].d_r) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "grid: '%s' implies d_r = %.6g s but '%s' implies %.6g s", c[i].key,
                          c[i].d_r, c[0].key, c[0].d_r);
            // report whichever of the two keys comes later in the file
            throw ConfigError(buf, std::max(cfg.line_of(std::string("grid.") + c[i].key),
                                            cfg.line_of(std::string("grid.") + c[0].key)));
        }
    return c[0].d_r;
}

/// Maximum excess delay of the configured channel.
inline double profile_max_delay(const ExperimentConfig& cfg) {
    if (cfg.awgn()) return 0.0;
    try {
        return load_profile_by_name(cfg.profile, cfg.profile_dir).d_max_s;
    } catch (const ConfigError& e) {
        throw ConfigError("channel: " + e.message(), cfg.line_of("channel.profile"));
    }
}

inline FrameGrid derive_grid(const ExperimentConfig& cfg) {
    const double d_r = resolve_delay_resolution(cfg);
    const double f_max = cfg.awgn() ? 0.0 : cfg.f_max();
    try {
        return FrameGrid::make(cfg.grid.M, cfg.grid.N, d_r, f_max, profile_max_delay(cfg), cfg.grid.cp);
    } catch (const ConfigError& e) {
        throw ConfigError(e.message(), e.line() > 0 ? e.line() : cfg.line_of("grid.cp"));
    }
}

/// Stripe half-width used by the equalizer.
inline Index stripe_half_width(const ExperimentConfig& cfg, const FrameGrid& grid) {
    return cfg.equalizer.stripe_k < 0 ? grid.K_max : cfg.equalizer.stripe_k;
}

/// Canonical one-line rendering of every field that affects results.
inline std::string canonical_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o.precision(17);
    auto opt = [&](const std::optional<double>& v) {
        if (v)
            o << *v;
        else
            o << '-';
        o << ';';
    };
    o << "grid:" << c.grid.M << ';' << c.grid.N << ';';
    opt(c.grid.d_r_s);
    opt(c.grid.bandwidth_hz);
    opt(c.grid.subcarrier_spacing_hz);
    opt(c.grid.symbol_duration_s);
    opt(c.grid.doppler_resolution_hz);
    o << c.grid.cp << "|channel:" << c.profile << ';' << static_cast<int>(c.doppler_mode) << ';';
    opt(c.f_max_hz);
    opt(c.v_max_kmh);
    opt(c.carrier_hz);
    o << "|schemes:";
    for (auto s : c.schemes) o << to_string(s) << ';';
    o << "|snr:" << c.snr.start_db << ';' << c.snr.stop_db << ';' << c.snr.step_db;
    o << "|trials:" << c.trials.max_realizations << ';' << c.trials.min_realizations << ';'
      << c.trials.target_bit_errors << ';' << c.trials.frames_per_realization << ';' << c.trials.chunk;
    o << "|eq:" << static_cast<int>(c.equalizer.domain) << ';' << c.equalizer.banded << ';' << c.equalizer.stripe_k
      << ';' << c.equalizer.max_discarded << ';' << c.equalizer.one_tap_baseline;
    o << "|csi:" << c.csi.enabled << ';' << c.csi.c;
    o << "|prop:" << static_cast<int>(c.propagation) << "|theory:" << c.theory;
    return o.str();
}

/// 64-bit FNV-1a of the canonical text. The seed and output path are not
/// part of the hash.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical_text(c)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace ffeq::harness
