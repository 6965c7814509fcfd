#pragma once

#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "io/csv.hpp"

// Experiment configuration.
//
//   # comment
//   key = value
//   [section]
//   key = value            -> stored as "section.key"
//
// Lists are comma separated. Every key has a default, so a missing key is never a hidden choice:
// the effective configuration (defaults included) is what gets echoed.
namespace hypmass::config {

enum class Kind { Real, Integer, Text, RealList, IntList };

struct KeySpec {
    std::string key;
    Kind kind;
    std::string fallback;
    std::string help;
};

inline const std::vector<KeySpec>& keys() {
    static const std::vector<KeySpec> all{
        {"experiment", Kind::Text, "mass_table",
         "mass_table | flow_run | cutoff_drift | two_radius | kernel | certificate | verify_all"},
        {"n", Kind::Integer, "3", "dimension"},
        {"seed", Kind::Integer, "1", "seed for randomized checks"},
        {"out", Kind::Text, "out", "output directory"},

        {"metric.family", Kind::Text, "schwarzschild",
         "schwarzschild | zero | conformal | c0_kink | c2_bump | log_oscillation"},
        {"metric.m", Kind::Real, "0.1", "schwarzschild mass parameter"},
        {"metric.amplitude", Kind::Real, "0.05", "c0_kink, c2_bump, log_oscillation, conformal amplitude"},
        {"metric.tau", Kind::Real, "0.5", "c0_kink decay rate"},
        {"metric.kink_scale", Kind::Real, "2.718281828459045", "c0_kink period in s"},
        {"metric.rise", Kind::Real, "0.5", "c0_kink rising fraction of a period"},
        {"metric.center", Kind::Real, "3", "c2_bump centre"},
        {"metric.width", Kind::Real, "0.6", "c2_bump width in ln s"},

        {"grid.s_min", Kind::Real, "2", "inner end of the radial grid"},
        {"grid.s_max", Kind::Real, "150", "outer end of the radial grid"},
        {"grid.hx", Kind::Real, "0.005", "step in ln s"},

        {"mass.radii", Kind::RealList, "10, 20, 50, 100, 200, 500, 1000", "radii for the mass table"},
        {"mass.cutoff_center", Kind::Real, "1", "bump cutoff centre (units of r)"},
        {"mass.cutoff_width", Kind::Real, "0.05", "bump cutoff half width (units of r)"},

        {"flow.horizon", Kind::Real, "0.01", "final flow time"},
        {"flow.t_first", Kind::Real, "1e-5", "first snapshot"},
        {"flow.snapshots", Kind::Integer, "31", "geometric snapshot count"},
        {"flow.dt_max", Kind::Real, "0.001", "largest step"},
        {"flow.eps_max", Kind::Real, "0.1", "closeness gate on sup|e0|"},
        {"flow.t_max", Kind::Real, "0.05", "gate on the horizon"},

        {"cutoff.radii", Kind::RealList, "800, 1600, 3200", "cutoff radii"},
        {"cutoff.theta", Kind::Real, "0", "backward horizon; 0 means theta = r^-eta"},
        {"cutoff.eta", Kind::Real, "1", "theta exponent when theta = 0"},
        {"cutoff.rprime_factor", Kind::Real, "2", "second radius over first for two_radius"},
        {"cutoff.levels", Kind::Integer, "512", "stored time levels"},
        {"cutoff.hx", Kind::Real, "0.001", "step in ln s"},
        {"cutoff.flow_hx", Kind::Real, "0.005", "flow step in ln s"},
        {"cutoff.flow_s_min", Kind::Real, "2", "inner end of the flow grid"},
        {"cutoff.drift_annulus", Kind::RealList, "0.85, 11.5", "annulus of the drift estimates (units of r); echoed only"},
        {"cutoff.gap_annulus", Kind::RealList, "0.8, 12", "annulus of the two-radius estimate (units of r); echoed only"},
        {"cutoff.drift_stride", Kind::Integer, "8", "levels between flow snapshots"},
        {"cutoff.profile_stride", Kind::Integer, "32", "subsampling of cutoff_profile.csv in t and s"},

        {"kernel.sigma0", Kind::Real, "0.01", "source width"},
        {"kernel.times", Kind::RealList, "0.0004, 0.0008, 0.0016, 0.0032, 0.0064, 0.0128, 0.05, 0.1, 0.2, 0.5",
         "output times"},
        {"kernel.cells_per_width", Kind::Real, "8", "cells per source width"},
        {"kernel.tail_tolerance", Kind::Real, "0.005", "step budget tolerance"},
        {"kernel.d_max", Kind::Real, "6", "outer wall in geodesic distance"},
        {"kernel.output_stride", Kind::Integer, "40", "subsampling of kernel.csv in s"},

        {"certificate.t", Kind::Real, "0.1", "flow time"},
        {"certificate.beta", Kind::Real, "0.3", "ball exponent"},
        {"certificate.a_inf", Kind::Real, "-6", "lower bound of the initial scalar curvature"},
        {"certificate.C", Kind::Real, "1", "kernel bound constant"},
        {"certificate.D", Kind::Real, "2", "kernel bound constant"},

        {"verify.criteria", Kind::IntList, "1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13", "criteria to run"},
    };
    return all;
}

inline const KeySpec* find_key(const std::string& key) {
    for (const auto& k : keys())
        if (k.key == key) return &k;
    return nullptr;
}

struct ConfigError : std::runtime_error {
    int line;  // 0 when the value came from a default or a flag
    ConfigError(int line_no, const std::string& msg)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg), line(line_no) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

// canonical text, so that serialize(parse(x)) is a fixed point
inline std::string normalize(const KeySpec& spec, const std::string& raw, int line) {
    auto real = [&](const std::string& t) {
        try {
            return io::format_double(io::parse_double(t));
        } catch (const std::exception&) {
            throw ConfigError(line, spec.key + ": expected a number, got '" + t + "'");
        }
    };
    auto integer = [&](const std::string& t) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (t.empty() || used != t.size()) throw ConfigError(line, spec.key + ": expected an integer, got '" + t + "'");
        return std::to_string(v);
    };
    auto list = [&](auto&& one) {
        const auto items = split_list(raw);
        if (items.empty() || (items.size() == 1 && items[0].empty()))
            throw ConfigError(line, spec.key + ": empty list");
        std::string out;
        for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + one(items[i]);
        return out;
    };
    switch (spec.kind) {
        case Kind::Real: return real(raw);
        case Kind::Integer: return integer(raw);
        case Kind::Text:
            if (raw.empty()) throw ConfigError(line, spec.key + ": empty value");
            return raw;
        case Kind::RealList: return list(real);
        case Kind::IntList: return list(integer);
    }
    return raw;
}

}  // namespace detail

class Config {
public:
    Config() {
        for (const auto& k : keys()) values_[k.key] = detail::normalize(k, k.fallback, 0);
    }

    void set(const std::string& key, const std::string& raw, int line = 0) {
        const KeySpec* spec = find_key(key);
        if (!spec) throw ConfigError(line, "unknown key '" + key + "'");
        values_[key] = detail::normalize(*spec, detail::trim(raw), line);
        lines_[key] = line;
    }

    const std::string& text(const std::string& key) const { return values_.at(key); }
    double real(const std::string& key) const { return io::parse_double(text(key)); }
    long long integer(const std::string& key) const { return std::stoll(text(key)); }
    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        for (const auto& t : detail::split_list(text(key))) out.push_back(io::parse_double(t));
        return out;
    }
    std::vector<long long> integers(const std::string& key) const {
        std::vector<long long> out;
        for (const auto& t : detail::split_list(text(key))) out.push_back(std::stoll(t));
        return out;
    }
    // source line of a key, 0 for defaults and flags
    int line(const std::string& key) const {
        auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }
    bool explicitly_set(const std::string& key) const { return lines_.count(key) > 0; }

    ConfigError error(const std::string& key, const std::string& msg) const {
        return ConfigError(line(key), key + " = " + text(key) + ": " + msg);
    }

    bool operator==(const Config& o) const { return values_ == o.values_; }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

inline Config parse(std::istream& in) {
    Config c;
    std::string raw, section;
    std::map<std::string, int> seen;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw ConfigError(line, "malformed section header '" + s + "'");
            section = detail::trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value', got '" + s + "'");
        const std::string k = detail::trim(s.substr(0, eq));
        if (k.empty()) throw ConfigError(line, "missing key before '='");
        const std::string key = section.empty() ? k : section + "." + k;
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError(line, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
        seen[key] = line;
        c.set(key, s.substr(eq + 1), line);
    }
    return c;
}

inline Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

// every key, defaults included, grouped by section in registry order
inline std::string serialize(const Config& c) {
    std::string out, section;
    for (const auto& k : keys()) {
        const auto dot = k.key.find('.');
        const std::string sec = dot == std::string::npos ? "" : k.key.substr(0, dot);
        const std::string name = dot == std::string::npos ? k.key : k.key.substr(dot + 1);
        if (sec != section) {
            out += "\n[" + sec + "]\n";
            section = sec;
        }
        out += name + " = " + c.text(k.key) + "\n";
    }
    return out;
}

}  // namespace hypmass::config
