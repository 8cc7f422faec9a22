#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "percolab/lattice.hpp"

namespace perc {

// Fixed-format numeric printing so identical doubles give identical bytes.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
   public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

   private:
    std::ostream& os_;
};

// Run configuration: plain key=value lines, '#' comments. Documented schema
// in the README (model, d, L, p, seed, sizeCap, samples, kgrid, zgrid, out).
struct RunConfig {
    std::map<std::string, std::string> kv;

    static RunConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static RunConfig parse(const std::string& text) {
        RunConfig cfg;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
            };
            const auto key = trim(line.substr(0, eq));
            const auto val = trim(line.substr(eq + 1));
            if (!key.empty()) cfg.kv[key] = val;
        }
        return cfg;
    }

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt = "") const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    double get_double(const std::string& k, double dflt) const {
        return has(k) ? std::stod(kv.at(k)) : dflt;
    }
    std::int64_t get_int(const std::string& k, std::int64_t dflt) const {
        return has(k) ? std::stoll(kv.at(k)) : dflt;
    }
    std::vector<double> get_list(const std::string& k) const {
        std::vector<double> out;
        if (!has(k)) return out;
        std::istringstream in(kv.at(k));
        std::string tok;
        while (std::getline(in, tok, ','))
            if (!tok.empty()) out.push_back(std::stod(tok));
        return out;
    }

    // canonical content hash for provenance lines
    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto mix = [&](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 0x100000001b3ull;
            }
        };
        for (const auto& [k, v] : kv) {
            mix(k);
            mix("=");
            mix(v);
            mix(";");
        }
        return h;
    }
};

inline ModelSpec model_from_config(const RunConfig& cfg) {
    const int d = static_cast<int>(cfg.get_int("d", 2));
    const double p = cfg.get("p", "auto") == "auto" ? -1.0 : cfg.get_double("p", 0.0);
    const std::string kind = cfg.get("model", "nn");
    ModelSpec m;
    if (kind == "nn" || kind == "nearest-neighbour")
        m = ModelSpec{d, Neighbourhood::NearestNeighbour, 1, p < 0 ? 0.0 : p};
    else if (kind == "spread" || kind == "spread-out")
        m = ModelSpec{d, Neighbourhood::SpreadOut, static_cast<int>(cfg.get_int("L", 1)),
                      p < 0 ? 0.0 : p};
    else
        throw std::runtime_error("config: model must be 'nn' or 'spread'");
    m.validate();
    return m;
}

inline std::string model_name(const ModelSpec& m) {
    return m.kind == Neighbourhood::NearestNeighbour ? "nn" : "spread";
}

// One JSON-lines provenance record; kept to flat string/number fields.
inline void write_provenance(std::ostream& os, const std::string& cmd, const RunConfig& cfg,
                             std::uint64_t samples) {
    os << "{\"cmd\":\"" << cmd << "\",\"config_hash\":\"" << std::hex << cfg.hash()
       << std::dec << "\",\"seed\":" << cfg.get_int("seed", 0) << ",\"samples\":" << samples
       << "}\n";
}

}  // namespace perc
