#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/rng.hpp"

namespace tpam {

// Flat key=value experiment settings. '#' starts a comment, blank lines are
// skipped, keys may appear once. The store stringly-types everything; typed
// getters convert on access and name the offending key on failure, so a bad
// file or flag surfaces as a usage error rather than a crash downstream.
class Config {
  public:
    bool contains(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(it->second, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: key '" + key + "' is not a number: '" +
                                        it->second + "'");
        }
        if (used != it->second.size())
            throw std::invalid_argument("config: key '" + key + "' is not a number: '" +
                                        it->second + "'");
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(it->second, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: key '" + key + "' is not an integer: '" +
                                        it->second + "'");
        }
        if (used != it->second.size() || it->second.front() == '-')
            throw std::invalid_argument("config: key '" + key + "' is not an integer: '" +
                                        it->second + "'");
        return v;
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        return static_cast<std::size_t>(get_u64(key, fallback));
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw std::invalid_argument("config: key '" + key + "' is not a boolean: '" +
                                    it->second + "'");
    }

    // Comma-separated integer list, e.g. m_values=50,100,200.
    std::vector<std::size_t> get_size_list(const std::string& key,
                                           std::vector<std::size_t> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::size_t> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            try {
                out.push_back(std::stoull(item, &used));
            } catch (const std::exception&) {
                used = std::string::npos;
            }
            if (used != item.size())
                throw std::invalid_argument("config: key '" + key +
                                            "' is not an integer list: '" + it->second + "'");
        }
        if (out.empty())
            throw std::invalid_argument("config: key '" + key + "' is an empty list");
        return out;
    }

    // Comma-separated real list, e.g. p_hots=0.02,0.05,0.1.
    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            try {
                out.push_back(std::stod(item, &used));
            } catch (const std::exception&) {
                used = std::string::npos;
            }
            if (used != item.size())
                throw std::invalid_argument("config: key '" + key + "' is not a number list: '" +
                                            it->second + "'");
        }
        if (out.empty())
            throw std::invalid_argument("config: key '" + key + "' is an empty list");
        return out;
    }

    // Rejects keys outside the given vocabulary, naming the first stray one.
    void expect_keys(const std::vector<std::string>& allowed) const {
        for (const auto& [key, value] : values_) {
            bool ok = false;
            for (const auto& a : allowed)
                if (key == a) {
                    ok = true;
                    break;
                }
            if (!ok) throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }

    const std::map<std::string, std::string>& items() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline Config parse_config(std::istream& in) {
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::strip(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " has no '=': '" + stripped + "'");
        const std::string key = detail::strip(stripped.substr(0, eq));
        const std::string value = detail::strip(stripped.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " has an empty key");
        if (cfg.contains(key))
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        cfg.set(key, value);
    }
    return cfg;
}

inline Config parse_config(const std::string& text) {
    std::istringstream ss(text);
    return parse_config(ss);
}

inline Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    return parse_config(in);
}

// Canonical form: keys sorted, one per line. The hash of this string is what
// output files embed, so two runs agree iff their resolved settings agree.
inline std::string serialize_config(const Config& cfg) {
    std::string out;
    for (const auto& [key, value] : cfg.items()) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

inline std::uint64_t config_hash(const Config& cfg) { return fnv1a64(serialize_config(cfg)); }

}  // namespace tpam
