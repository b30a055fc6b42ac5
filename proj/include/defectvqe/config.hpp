#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectvqe/fixtures.hpp"
#include "defectvqe/mapping.hpp"
#include "defectvqe/mitigation.hpp"
#include "defectvqe/noise.hpp"
#include "defectvqe/vqe.hpp"

namespace dvqe {

/// User-input problems (bad config file, bad CLI usage); mapped to exit
/// code 2, as opposed to domain failures which exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat declarative `key = value` file: strings quoted, booleans bare,
/// numbers plain, lists in brackets.  `#` starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& is) {
        KeyValueConfig cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": expected `key = value`");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": empty key or value");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f.good()) throw ConfigError("cannot open config file '" + path + "'");
        return parse(f);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& def = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::string v = it->second;
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
            return v.substr(1, v.size() - 2);
        return v;
    }

    double get_double(const std::string& key, double def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("config key '" + key + "': expected a number, got '" +
                              it->second + "'");
        }
    }

    long get_int(const std::string& key, long def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            std::size_t used = 0;
            const long v = std::stol(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("config key '" + key + "': expected an integer, got '" +
                              it->second + "'");
        }
    }

    bool get_bool(const std::string& key, bool def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw ConfigError("config key '" + key + "': expected true or false");
    }

    std::vector<long> get_int_list(const std::string& key, std::vector<long> def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::string v = it->second;
        if (v.size() < 2 || v.front() != '[' || v.back() != ']')
            throw ConfigError("config key '" + key + "': expected a [..] list");
        std::vector<long> out;
        std::string body = v.substr(1, v.size() - 2);
        std::replace(body.begin(), body.end(), ',', ' ');
        std::istringstream bs(body);
        long x;
        while (bs >> x) out.push_back(x);
        if (!bs.eof()) throw ConfigError("config key '" + key + "': malformed list");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

enum class RunMode { fci, vqe, scan, qse, zne };

inline RunMode run_mode_from_string(const std::string& s) {
    if (s == "fci") return RunMode::fci;
    if (s == "vqe") return RunMode::vqe;
    if (s == "scan") return RunMode::scan;
    if (s == "qse") return RunMode::qse;
    if (s == "zne") return RunMode::zne;
    throw ConfigError("unknown mode '" + s + "'");
}

/// Fully resolved run settings; every knob has a value after resolve().
struct RunConfig {
    RunMode mode = RunMode::fci;

    // problem
    std::string fixture;          // one of the built-ins, or
    std::string hamiltonian_path; // an FCIDUMP file
    int electrons = 0;
    double sz = 0.0;
    std::vector<int> reference_modes;  // occupied spin orbitals of the trial state

    // encoding
    MappingKind mapping = MappingKind::parity;
    bool taper = true;
    std::optional<std::pair<int, int>> sector;

    // ansatz / estimation
    bool spin_conserving = true;
    long shots = 8192;
    bool post_select = true;
    bool readout_mitigation = false;
    std::string noise = "none";  // none | casablanca | path
    std::uint64_t seed = 0;
    int workers = 1;

    // optimizer
    OptimizerConfig optimizer;

    // scan / zne / qse
    int scan_points = 12;
    std::vector<int> replications{1, 2, 3, 4, 5};
    int repetitions = 50;
    FitKind fit = FitKind::linear;
    double s_threshold = -1.0;  // resolved per noise setting when negative
    std::string qse_reference = "exact";  // exact | vqe

    std::string output_dir = "out";
    bool emit_timestamp = false;

    std::map<std::string, std::string> raw;  // the parsed key/value pairs

    static RunConfig resolve(const KeyValueConfig& kv) {
        RunConfig c;
        c.raw = kv.entries();
        c.mode = run_mode_from_string(kv.get_string("mode", "fci"));
        c.fixture = kv.get_string("fixture");
        c.hamiltonian_path = kv.get_string("hamiltonian");
        c.electrons = static_cast<int>(kv.get_int("electrons", 0));
        c.sz = kv.get_double("sz", 0.0);
        for (long m : kv.get_int_list("reference", {}))
            c.reference_modes.push_back(static_cast<int>(m));

        const std::string mapping = kv.get_string("mapping", "parity");
        c.mapping = mapping_kind_from_string(mapping);
        c.taper = kv.get_bool("taper", c.mapping == MappingKind::parity);
        if (kv.has("sector")) {
            auto sec = kv.get_int_list("sector", {});
            if (sec.size() != 2)
                throw ConfigError("config key 'sector': expected [total_parity, up_parity]");
            c.sector = {static_cast<int>(sec[0]), static_cast<int>(sec[1])};
        }

        c.spin_conserving = kv.get_bool("spin_conserving", true);
        c.shots = kv.get_int("shots", 8192);
        c.post_select = kv.get_bool("post_select", true);
        c.readout_mitigation = kv.get_bool("readout_mitigation", false);
        c.noise = kv.get_string("noise", "none");
        c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
        c.workers = static_cast<int>(kv.get_int("workers", 1));

        c.optimizer.kind = kv.get_string("optimizer", "spsa") == "nelder_mead"
                               ? OptimizerKind::nelder_mead
                               : OptimizerKind::spsa;
        c.optimizer.max_iterations = static_cast<int>(kv.get_int("max_iterations", 150));
        c.optimizer.a = kv.get_double("spsa_a", 2.0);
        c.optimizer.c = kv.get_double("spsa_c", 0.4);
        c.optimizer.big_a = kv.get_double("spsa_A", 10.0);
        c.optimizer.alpha = kv.get_double("spsa_alpha", 0.602);
        c.optimizer.gamma = kv.get_double("spsa_gamma", 0.101);
        c.optimizer.tolerance = kv.get_double("tolerance", 1e-8);
        c.optimizer.tail_average = static_cast<int>(kv.get_int("tail_average", 25));
        c.optimizer.seed = static_cast<std::uint64_t>(kv.get_int("optimizer_seed", 1));

        c.scan_points = static_cast<int>(kv.get_int("scan_points", 12));
        c.replications.clear();
        for (long n : kv.get_int_list("replications", {1, 2, 3, 4, 5}))
            c.replications.push_back(static_cast<int>(n));
        c.repetitions = static_cast<int>(kv.get_int("repetitions", 50));
        c.fit = fit_kind_from_string(kv.get_string("fit", "linear"));
        c.s_threshold = kv.get_double("s_threshold", -1.0);
        c.qse_reference = kv.get_string("qse_reference", "exact");
        c.output_dir = kv.get_string("output_dir", "out");
        c.emit_timestamp = kv.get_bool("emit_timestamp", false);

        if (c.s_threshold < 0)
            c.s_threshold = (c.noise == "none" || c.shots == 0) ? 1e-8 : 1e-3;
        return c;
    }

    struct Diagnostic {
        std::string key;
        std::string message;
    };

    std::vector<Diagnostic> validate() const {
        std::vector<Diagnostic> out;
        if (fixture.empty() && hamiltonian_path.empty())
            out.push_back({"fixture", "either `fixture` or `hamiltonian` must be set"});
        if (!fixture.empty() && !hamiltonian_path.empty())
            out.push_back({"fixture", "`fixture` and `hamiltonian` are mutually exclusive"});
        if (!fixture.empty()) {
            const auto names = fixture_names();
            if (std::find(names.begin(), names.end(), fixture) == names.end())
                out.push_back({"fixture", "unknown fixture '" + fixture + "'"});
        }
        if (!hamiltonian_path.empty()) {
            if (!std::filesystem::exists(hamiltonian_path))
                out.push_back({"hamiltonian", "file not found: " + hamiltonian_path});
            if (electrons <= 0)
                out.push_back({"electrons", "required (positive) with an FCIDUMP input"});
        }
        if (noise != "none" && noise != "casablanca" && !std::filesystem::exists(noise))
            out.push_back({"noise", "expected none, casablanca, or a readable file"});
        if (shots < 0) out.push_back({"shots", "must be >= 0 (0 = exact expectations)"});
        if (workers < 1) out.push_back({"workers", "must be >= 1"});
        if (scan_points < 2 && mode == RunMode::scan)
            out.push_back({"scan_points", "need at least 2 grid points"});
        if (mode == RunMode::zne || mode == RunMode::qse) {
            if (replications.size() < 2 && (mode == RunMode::zne || noise != "none"))
                out.push_back({"replications", "need at least two replication factors"});
            if (repetitions < 1) out.push_back({"repetitions", "must be positive"});
        }
        if (qse_reference != "exact" && qse_reference != "vqe")
            out.push_back({"qse_reference", "expected exact or vqe"});
        if (taper && mapping != MappingKind::parity)
            out.push_back({"taper", "tapering requires the parity mapping"});
        if (readout_mitigation && shots == 0)
            out.push_back({"readout_mitigation", "meaningless in exact-expectation mode"});
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["mode"] = std::vector<const char*>{"fci", "vqe", "scan", "qse",
                                             "zne"}[static_cast<int>(mode)];
        if (!fixture.empty()) j["fixture"] = fixture;
        if (!hamiltonian_path.empty()) j["hamiltonian"] = hamiltonian_path;
        j["electrons"] = electrons;
        j["sz"] = sz;
        j["reference"] = reference_modes;
        j["mapping"] = mapping == MappingKind::parity ? "parity" : "jordan_wigner";
        j["taper"] = taper;
        if (sector) j["sector"] = {sector->first, sector->second};
        j["spin_conserving"] = spin_conserving;
        j["shots"] = shots;
        j["post_select"] = post_select;
        j["readout_mitigation"] = readout_mitigation;
        j["noise"] = noise;
        j["seed"] = seed;
        j["workers"] = workers;
        j["optimizer"] = optimizer.kind == OptimizerKind::spsa ? "spsa" : "nelder_mead";
        j["max_iterations"] = optimizer.max_iterations;
        j["spsa_a"] = optimizer.a;
        j["spsa_c"] = optimizer.c;
        j["spsa_A"] = optimizer.big_a;
        j["spsa_alpha"] = optimizer.alpha;
        j["spsa_gamma"] = optimizer.gamma;
        j["tolerance"] = optimizer.tolerance;
        j["tail_average"] = optimizer.tail_average;
        j["optimizer_seed"] = optimizer.seed;
        j["scan_points"] = scan_points;
        j["replications"] = replications;
        j["repetitions"] = repetitions;
        j["fit"] = fit == FitKind::linear ? "linear"
                   : fit == FitKind::quadratic ? "quadratic" : "exponential";
        j["s_threshold"] = s_threshold;
        j["qse_reference"] = qse_reference;
        j["output_dir"] = output_dir;
        return j;
    }
};

}  // namespace dvqe
