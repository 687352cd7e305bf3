// Plain-text experiment configuration: "[section]" headers with
// "key = value" lines, no nesting. Unknown keys are rejected so a config
// file can serve as exact provenance for a run.
#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedval::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat "section.key" -> raw string store.
class Config {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    }

    std::string get_string(const std::string& key) const { return raw(key); }

    double get_double(const std::string& key) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(raw(key), &used);
            if (used != raw(key).size()) throw ConfigError("");
            return v;
        } catch (...) {
            throw ConfigError("config key " + key + ": not a number: '" + raw(key) + "'");
        }
    }

    std::int64_t get_int(const std::string& key) const {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(raw(key), &used);
            if (used != raw(key).size()) throw ConfigError("");
            return v;
        } catch (...) {
            throw ConfigError("config key " + key + ": not an integer: '" + raw(key) + "'");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = raw(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
    }

    std::vector<std::int64_t> get_int_list(const std::string& key) const {
        std::vector<std::int64_t> out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.push_back(std::stoll(item));
            } catch (...) {
                throw ConfigError("config key " + key + ": bad list item '" + item + "'");
            }
        }
        if (out.empty()) throw ConfigError("config key " + key + ": empty list");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    static std::string trim(const std::string& s) {
        std::size_t begin = 0, end = s.size();
        while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
        while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
        return s.substr(begin, end - begin);
    }

private:
    std::map<std::string, std::string> values_;
};

inline Config parse_config_text(const std::string& text) {
    Config cfg;
    std::stringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = Config::trim(line);
        if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
        if (trimmed.front() == '[') {
            if (trimmed.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = Config::trim(trimmed.substr(1, trimmed.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section");
            continue;
        }
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = Config::trim(trimmed.substr(0, eq));
        const std::string value = Config::trim(trimmed.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.set(section.empty() ? key : section + "." + key, value);
    }
    return cfg;
}

inline Config load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace fedval::cli
