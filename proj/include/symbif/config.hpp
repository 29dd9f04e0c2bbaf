// Flat key = value run configuration. Numeric inputs stay decimal strings
// until a backend parses them with outward rounding, so no binary float ever
// enters a rigorous computation through the config path.

#pragma once

#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "symbif/interval.hpp"

namespace symbif {

struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class run_config {
public:
    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> keys{
            "pipeline",     "system",       "precision",  "label",
            "k",            "k_list",       "nu_lo",      "nu_hi",
            "samples",      "seed_nu",      "seed_p1",    "seed_x",
            "seed_yd",      "beta",         "mu",         "box_j_radius",
            "box_p1_radius","tol",          "odeint_tol", "odeint_order",
            "t_subdiv",     "t_max",        "workers",    "principal_period",
            "type",         "initial_width","min_width",
        };
        return keys;
    }

    static run_config parse(const std::string& text) {
        run_config cfg;
        std::istringstream is(text);
        std::string line;
        int ln = 0;
        while (std::getline(is, line)) {
            ++ln;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                if (b == std::string::npos) return std::string();
                auto e = s.find_last_not_of(" \t\r");
                return s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("line " + std::to_string(ln) + ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (!known_keys().count(key))
                throw config_error("line " + std::to_string(ln) + ": unknown key '" + key + "'");
            if (cfg.kv_.count(key))
                throw config_error("line " + std::to_string(ln) + ": duplicate key '" + key + "'");
            if (val.empty())
                throw config_error("line " + std::to_string(ln) + ": empty value for '" + key + "'");
            cfg.kv_[key] = val;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw config_error("missing required key '" + key + "'");
        return it->second;
    }
    std::string str_or(const std::string& key, const std::string& dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }

    int integer(const std::string& key) const {
        try {
            std::size_t pos = 0;
            int v = std::stoi(str(key), &pos);
            if (pos != str(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': not an integer");
        }
    }
    int integer_or(const std::string& key, int dflt) const {
        return has(key) ? integer(key) : dflt;
    }

    // nonrigorous numeric knob (tolerances, ranges): plain double
    double number(const std::string& key) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(str(key), &pos);
            if (pos != str(key).size()) throw std::invalid_argument("");
            return v;
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': not a number");
        }
    }
    double number_or(const std::string& key, double dflt) const {
        return has(key) ? number(key) : dflt;
    }

    bool flag_or(const std::string& key, bool dflt) const {
        if (!has(key)) return dflt;
        const std::string& v = kv_.at(key);
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw config_error("key '" + key + "': expected on/off");
    }

    // rigorous numeric input: outward decimal parse in the chosen backend
    template <class P>
    interval<P> box(const std::string& key) const {
        const std::string s = str(key);
        auto numeric = [](std::string t) {
            while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front())))
                t.erase(t.begin());
            while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())))
                t.pop_back();
            if (t.empty()) return false;
            char* end = nullptr;
            std::strtod(t.c_str(), &end);
            return end == t.c_str() + t.size();
        };
        bool ok = false;
        if (!s.empty() && s.front() == '[' && s.back() == ']') {
            auto comma = s.find(',');
            ok = comma != std::string::npos && numeric(s.substr(1, comma - 1)) &&
                 numeric(s.substr(comma + 1, s.size() - comma - 2));
        } else {
            ok = numeric(s);
        }
        if (!ok)
            throw config_error("key '" + key + "': bad decimal or interval string ('" + s +
                               "')");
        try {
            return interval<P>::parse(s);
        } catch (const std::exception& e) {
            throw config_error("key '" + key + "': bad decimal or interval string ('" + s +
                               "'): " + e.what());
        }
    }

    std::vector<int> int_list(const std::string& key) const {
        std::vector<int> out;
        std::istringstream is(str(key));
        std::string tok;
        while (std::getline(is, tok, ',')) {
            try {
                out.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                throw config_error("key '" + key + "': bad integer list");
            }
        }
        if (out.empty()) throw config_error("key '" + key + "': empty list");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// stable content hash of the parsed config (FNV-1a over sorted entries):
// identifies the run in certificate headers without a crypto dependency
inline std::string config_hash(const run_config& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1f;
        h *= 1099511628211ull;
    };
    for (const auto& [k, v] : cfg.entries()) {
        mix(k);
        mix(v);
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace symbif
