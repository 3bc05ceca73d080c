#include "mmloc/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mmloc/error.hpp"

namespace mmloc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' || line[i] == ';') return line.substr(0, i);
    }
    return line;
}

double to_double(const std::string& section, const std::string& key,
                 const std::string& raw) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (trim(raw.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw error("bad_number", "config value [" + section + "] " + key + " = '" +
                                  raw + "' is not a number");
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw error("bad_config", "unterminated section header at line " +
                                              std::to_string(lineno));
            }
            section = trim(line.substr(1, line.size() - 2));
            cfg.data_[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw error("bad_config",
                        "expected key = value at line " + std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw error("bad_config", "empty key at line " + std::to_string(lineno));
        }
        cfg.data_[section][key] = value;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("config_not_found", "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const std::string* Config::find(const std::string& section,
                                const std::string& key) const {
    const auto sit = data_.find(section);
    if (sit == data_.end()) return nullptr;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    return &kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) {
        throw error("missing_key",
                    "config is missing [" + section + "] " + key);
    }
    return *v;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    return to_double(section, key, get_string(section, key));
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    const std::string* v = find(section, key);
    return v ? to_double(section, key, *v) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key) const {
    const double v = get_double(section, key);
    const long long n = static_cast<long long>(v);
    if (static_cast<double>(n) != v) {
        throw error("bad_number",
                    "config value [" + section + "] " + key + " must be an integer");
    }
    return n;
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    std::string s = *v;
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw error("bad_config",
                "config value [" + section + "] " + key + " is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
    const std::string raw = get_string(section, key);
    std::vector<double> out;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw error("bad_number", "empty element in list [" + section + "] " + key);
        }
        out.push_back(to_double(section, key, item));
    }
    if (out.empty()) {
        throw error("bad_number", "empty list [" + section + "] " + key);
    }
    return out;
}

std::vector<std::string> Config::sections() const {
    std::vector<std::string> out;
    out.reserve(data_.size());
    for (const auto& [name, _] : data_) out.push_back(name);
    return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
    std::vector<std::string> out;
    const auto sit = data_.find(section);
    if (sit == data_.end()) return out;
    out.reserve(sit->second.size());
    for (const auto& [name, _] : sit->second) out.push_back(name);
    return out;
}

namespace {

Vec3 get_vec3(const Config& cfg, const std::string& section, const std::string& key) {
    const std::vector<double> v = cfg.get_doubles(section, key);
    if (v.size() != 3) {
        throw error("bad_config",
                    "config value [" + section + "] " + key + " must have 3 elements");
    }
    return Vec3(v[0], v[1], v[2]);
}

}  // namespace

Scenario scenario_from_config(const Config& cfg) {
    if (cfg.has("scenario", "preset")) {
        Scenario sc = scenario_preset(cfg.get_string("scenario", "preset"));
        // Allow point overrides on top of a preset.
        if (cfg.has("scenario", "ue_position")) {
            sc.ue_pos = get_vec3(cfg, "scenario", "ue_position");
        }
        if (cfg.has("scenario", "ue_velocity")) {
            sc.ue_vel = get_vec3(cfg, "scenario", "ue_velocity");
        }
        sc.clock_bias = cfg.get_double("scenario", "clock_bias", sc.clock_bias);
        for (int n = 1; n <= static_cast<int>(sc.n_rrhs()); ++n) {
            const std::string key = "scatterer" + std::to_string(n);
            if (cfg.has("scenario", key)) {
                sc.scatterers[static_cast<std::size_t>(n - 1)] =
                    get_vec3(cfg, "scenario", key);
            }
        }
        return sc;
    }

    Scenario sc;
    const long long count = cfg.get_int("scenario", "rrh_count");
    if (count < 2) {
        throw error("bad_config", "rrh_count must be at least 2");
    }
    sc.rrhs.reserve(static_cast<std::size_t>(count));
    for (long long n = 1; n <= count; ++n) {
        sc.rrhs.push_back(get_vec3(cfg, "scenario", "rrh" + std::to_string(n)));
    }
    sc.ue_pos = get_vec3(cfg, "scenario", "ue_position");
    sc.ue_vel = cfg.has("scenario", "ue_velocity")
                    ? get_vec3(cfg, "scenario", "ue_velocity")
                    : Vec3::Zero();
    sc.clock_bias = cfg.get_double("scenario", "clock_bias", 0.0);
    sc.scatterers.assign(static_cast<std::size_t>(count), std::nullopt);
    for (long long n = 1; n <= count; ++n) {
        const std::string key = "scatterer" + std::to_string(n);
        if (cfg.has("scenario", key)) {
            sc.scatterers[static_cast<std::size_t>(n - 1)] =
                get_vec3(cfg, "scenario", key);
        }
    }
    return sc;
}

NoiseModel noise_from_config(const Config& cfg) {
    NoiseModel noise;
    const std::string kind =
        cfg.get_string("noise", "kind", "dominant_plus_fluctuating");
    if (kind == "gaussian") {
        noise.kind = NoiseModel::Kind::gaussian;
    } else if (kind == "dominant_plus_fluctuating") {
        noise.kind = NoiseModel::Kind::dominant_plus_fluctuating;
    } else {
        throw error("bad_config", "unknown noise kind: " + kind);
    }
    noise.sigma_d = cfg.get_double("noise", "sigma_range", noise.sigma_d);
    noise.sigma_a = cfg.get_double("noise", "sigma_angle", noise.sigma_a);
    noise.fdoa_factor = cfg.get_double("noise", "rate_factor", noise.fdoa_factor);
    noise.fluctuating_ratio_tdoa =
        cfg.get_double("noise", "ratio_range", noise.fluctuating_ratio_tdoa);
    noise.fluctuating_ratio_fdoa =
        cfg.get_double("noise", "ratio_rate", noise.fluctuating_ratio_fdoa);
    noise.fluctuating_ratio_aoa =
        cfg.get_double("noise", "ratio_angle", noise.fluctuating_ratio_aoa);
    noise.seed = static_cast<std::uint64_t>(cfg.get_int("noise", "seed", 0));
    return noise;
}

}  // namespace mmloc
