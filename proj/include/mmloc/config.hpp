#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmloc/geometry.hpp"

namespace mmloc {

// Minimal INI-style configuration reader.
//
// Grammar:
//   [section]            starts a section (names are case-sensitive)
//   key = value          assigns within the current section
//   # ... or ; ...       comment to end of line
//   values may be scalars or comma-separated lists
//
// Keys outside any section live in the "" section.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;

    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;

    long long get_int(const std::string& section, const std::string& key) const;
    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const;

    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const;

    std::vector<double> get_doubles(const std::string& section,
                                    const std::string& key) const;

    std::vector<std::string> sections() const;
    std::vector<std::string> keys(const std::string& section) const;

private:
    const std::string* find(const std::string& section, const std::string& key) const;

    // section -> (key -> raw value)
    std::map<std::string, std::map<std::string, std::string>> data_;
};

// Builds a scenario from a config.  Accepts either
//   [scenario] preset = hex6
// or an explicit listing:
//   [scenario] rrh_count = N ; rrh1 = x,y,z ; ... ; ue_position = ... ;
//   ue_velocity = ... ; scatterer2 = x,y,z (optional, keyed by receiver index)
Scenario scenario_from_config(const Config& cfg);

// Reads a [noise] section: kind = gaussian|dominant_plus_fluctuating,
// sigma_range, sigma_angle, plus optional ratio overrides and seed.
NoiseModel noise_from_config(const Config& cfg);

}  // namespace mmloc
