#pragma once

// Flat key = value run configuration for the command-line workbench.
// Lines starting with '#' (or trailing "# ...") are comments.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sta/errors.hpp"
#include "sta/evolution.hpp"
#include "sta/protocol.hpp"
#include "sta/units.hpp"
#include "sta/work_stats.hpp"

namespace sta {

struct RunConfig {
    double omega0_mhz{10.0};
    double omega1_mhz{10.0};
    std::vector<double> operation_times_ns{25.0, 50.0, 100.0, 200.0, 500.0};
    double grid_step_tbar{0.02};
    double field_step_tbar{0.005};
    double dt_ns{0.005};
    bool dissipation_enabled{false};
    double t1_us{22.0};
    double t2star_us{64.0};
    bool shot_noise_enabled{false};
    int shots{1000};
    bool seed_set{false};
    std::uint64_t seed{0};
    double drag_time_ns{kDefaultDragTimeNs};
    double tau_m_step_ns{1.0};
    std::string output_dir{"sta_output"};

    static constexpr double kDefaultDragTimeNs = 100.0;

    PaperSchedule schedule(double T) const {
        return {units::mhz_to_rad_per_ns(omega0_mhz), units::mhz_to_rad_per_ns(omega1_mhz), T};
    }

    PropagatorConfig propagator() const { return {dt_ns}; }

    /// Relaxation parameters from the file; `enabled` follows dissipation_enabled.
    DissipationParams dissipation() const {
        return {units::us_to_ns(t1_us), units::us_to_ns(t2star_us), dissipation_enabled};
    }

    /// Same rates with dissipation switched on regardless of the flag.
    DissipationParams dissipation_on() const {
        auto d = dissipation();
        d.enabled = true;
        return d;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace detail

inline void validate(const RunConfig& c) {
    if (!(c.omega0_mhz > 0.0)) throw ConfigError("omega0_mhz must be positive");
    if (!(c.omega1_mhz >= 0.0)) throw ConfigError("omega1_mhz must be non-negative");
    for (double T : c.operation_times_ns)
        if (!(T > 0.0)) throw ConfigError("operation_times_ns entries must be positive");
    if (!(c.dt_ns > 0.0)) throw ConfigError("dt_ns must be positive");
    if (!(c.t1_us > 0.0) || !(c.t2star_us > 0.0)) throw ConfigError("t1_us and t2star_us must be positive");
    if (!(c.drag_time_ns > 0.0)) throw ConfigError("drag_time_ns must be positive");
    if (!(c.tau_m_step_ns > 0.0)) throw ConfigError("tau_m_step_ns must be positive");
    if (c.shot_noise_enabled && c.shots <= 0) throw ConfigError("shots must be positive");
    if (c.shot_noise_enabled && !c.seed_set) throw ConfigError("shot noise requires an explicit seed");
    if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
    reduced_time_grid(c.grid_step_tbar);
    reduced_time_grid(c.field_step_tbar);
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string v = detail::trim(line.substr(eq + 1));
        if (key == "omega0_mhz") c.omega0_mhz = detail::parse_double(key, v);
        else if (key == "omega1_mhz") c.omega1_mhz = detail::parse_double(key, v);
        else if (key == "operation_times_ns") c.operation_times_ns = detail::parse_list(key, v);
        else if (key == "grid_step_tbar") c.grid_step_tbar = detail::parse_double(key, v);
        else if (key == "field_step_tbar") c.field_step_tbar = detail::parse_double(key, v);
        else if (key == "dt_ns") c.dt_ns = detail::parse_double(key, v);
        else if (key == "dissipation_enabled") c.dissipation_enabled = detail::parse_bool(key, v);
        else if (key == "t1_us") c.t1_us = detail::parse_double(key, v);
        else if (key == "t2star_us") c.t2star_us = detail::parse_double(key, v);
        else if (key == "shot_noise_enabled") c.shot_noise_enabled = detail::parse_bool(key, v);
        else if (key == "shots") c.shots = static_cast<int>(detail::parse_integer(key, v));
        else if (key == "seed") {
            c.seed = static_cast<std::uint64_t>(detail::parse_integer(key, v));
            c.seed_set = true;
        } else if (key == "drag_time_ns") c.drag_time_ns = detail::parse_double(key, v);
        else if (key == "tau_m_step_ns") c.tau_m_step_ns = detail::parse_double(key, v);
        else if (key == "output_dir") c.output_dir = v;
        else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    validate(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    return parse_config(in);
}

}  // namespace sta
