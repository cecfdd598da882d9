// Result persistence: CSV and JSON-lines writers (master seed echoed in the
// header) and the key = value run-configuration format.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace slipsim {

using json = nlohmann::json;

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
              std::uint64_t master_seed)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
        out_ << "# master_seed=" << master_seed << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        out_.precision(17);
    }

    template <class... Ts>
    void row(Ts... vs) {
        bool first = true;
        ((out_ << (first ? "" : ",") << vs, first = false), ...);
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(2) << "\n";
}

inline void append_jsonl(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Run configuration: `key = value` lines, '#' comments.  Values from a config
// file override command-line flags.
class Config {
  public:
    Config() = default;

    static Config parse_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config " + path.string());
        Config cfg;
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (!key.empty()) cfg.kv_[key] = val;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : std::stod(it->second);
    }
    long get_long(const std::string& key, long fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : std::stol(it->second);
    }

    // sigma lists like "0.5,0.42,0.35"
    std::vector<double> get_list(const std::string& key,
                                 const std::vector<double>& fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(std::stod(tok));
        return out;
    }

    void set(const std::string& key, const std::string& val) { kv_[key] = val; }
    const std::map<std::string, std::string>& entries() const { return kv_; }

    json to_json() const {
        json j;
        for (const auto& [k, v] : kv_) j[k] = v;
        return j;
    }

  private:
    std::map<std::string, std::string> kv_;
};

} // namespace slipsim
