#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mourre/errors.hpp"
#include "mourre/linalg.hpp"

namespace mourre::cli {

inline const std::vector<std::string>& all_suites() {
    static const std::vector<std::string> s{"commutators", "hs", "mourre", "regularity", "analyticity", "spinboson-bounds"};
    return s;
}

struct Tolerances {
    double commutator = 1e-9;   // power expansion, relative to ||K|| ||L||^k
    double resolvent = 1e-8;    // composition formula, relative
    double derivative = 1e-5;   // conjugation derivative at step 1e-3, relative
    double hs = 1e-6;           // Helffer-Sjostrand vs spectral oracle, relative to sup |f|
    double bound = 1e-8;        // explicit bound, relative to RHS
    double spinboson_slack = 1.01;
    double cauchy = 1e-8;
};

struct RunConfig {
    std::string model = "lattice";
    std::vector<std::string> suites;
    int k_max = 12;
    std::string output_dir = "out";
    unsigned long long seed = 20240601ULL;
    Tolerances tol;

    // lattice
    int sites = 64;
    double spacing = 1.0;
    // spinboson
    double eps = 0.75, mass = 1.0, uv_cutoff = 1.0, grid_k_max = 4.0;
    int grid_M = 24, n_max = 2;
    std::vector<double> G_re{0.0, 0.1, 0.1, 0.0}, G_im{0.0, 0.0, 0.0, 0.0};
    // file
    std::string H_path, A_path;
    // energy window, shared by every model
    double I_lo = 1.0, I_hi = 3.0, target = 2.0;
    int budget = 2;  // -1: half the rank of 1_I(H)

    bool has_suite(const std::string& s) const {
        for (const auto& x : suites)
            if (x == s) return true;
        return false;
    }
};

inline std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// key = value lines, [section] headers, '#' comments. Keys come back as "section.key".
inline std::map<std::string, std::string> parse_kv(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        if (kv.count(key)) throw ConfigError("duplicate key " + key);
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

namespace detail {

inline double to_double(const std::string& k, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(k + ": not a number: '" + v + "'");
    }
}

inline long long to_int(const std::string& k, const std::string& v) {
    try {
        size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(k + ": not an integer: '" + v + "'");
    }
}

inline std::vector<double> to_list(const std::string& k, const std::string& v, size_t n) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(k, s));
    if (out.size() != n) throw ConfigError(k + ": expected " + std::to_string(n) + " numbers");
    return out;
}

}  // namespace detail

inline RunConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    RunConfig c;
    std::set<std::string> used;
    auto get = [&](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        used.insert(key);
        return &it->second;
    };
    auto num = [&](const std::string& key, double& dst) {
        if (auto v = get(key)) dst = detail::to_double(key, *v);
    };
    auto integer = [&](const std::string& key, int& dst) {
        if (auto v = get(key)) dst = static_cast<int>(detail::to_int(key, *v));
    };

    if (auto v = get("run.model")) c.model = *v;
    if (c.model != "lattice" && c.model != "spinboson" && c.model != "file")
        throw ConfigError("run.model must be lattice, spinboson or file");
    if (auto v = get("run.suite")) c.suites = split_list(*v);
    integer("run.k_max", c.k_max);
    if (auto v = get("run.output_dir")) c.output_dir = *v;
    if (auto v = get("run.seed")) c.seed = static_cast<unsigned long long>(detail::to_int("run.seed", *v));

    num("tolerances.commutator", c.tol.commutator);
    num("tolerances.resolvent", c.tol.resolvent);
    num("tolerances.derivative", c.tol.derivative);
    num("tolerances.hs_tol", c.tol.hs);
    num("tolerances.bound", c.tol.bound);
    num("tolerances.spinboson_slack", c.tol.spinboson_slack);
    num("tolerances.cauchy", c.tol.cauchy);

    if (c.model == "spinboson") {
        c.I_lo = 0.6;
        c.I_hi = 0.9;
        c.target = 0.75;
        c.budget = -1;
    }
    const std::string sec = c.model;
    integer("lattice.sites", c.sites);
    num("lattice.spacing", c.spacing);
    num("spinboson.eps", c.eps);
    num("spinboson.mass", c.mass);
    num("spinboson.uv_cutoff", c.uv_cutoff);
    num("spinboson.k_max", c.grid_k_max);
    integer("spinboson.M", c.grid_M);
    integer("spinboson.n_max", c.n_max);
    if (auto v = get("spinboson.G_re")) c.G_re = detail::to_list("spinboson.G_re", *v, 4);
    if (auto v = get("spinboson.G_im")) c.G_im = detail::to_list("spinboson.G_im", *v, 4);
    if (auto v = get("file.H")) c.H_path = *v;
    if (auto v = get("file.A")) c.A_path = *v;
    if (auto v = get(sec + ".interval")) {
        auto iv = detail::to_list(sec + ".interval", *v, 2);
        c.I_lo = iv[0];
        c.I_hi = iv[1];
    }
    num(sec + ".target", c.target);
    integer(sec + ".budget", c.budget);

    for (const auto& [k, v] : kv)
        if (!used.count(k)) throw ConfigError("unknown key " + k);

    for (const auto& s : c.suites) {
        bool ok = false;
        for (const auto& t : all_suites()) ok = ok || s == t;
        if (!ok) throw ConfigError("unknown suite " + s);
    }
    if (c.k_max < 1) throw ConfigError("run.k_max must be >= 1");
    for (double t : {c.tol.commutator, c.tol.resolvent, c.tol.derivative, c.tol.hs, c.tol.bound, c.tol.cauchy,
                     c.tol.spinboson_slack})
        if (!(t >= 0) || !std::isfinite(t)) throw ConfigError("tolerances must be finite and >= 0");
    if (!(c.I_hi > c.I_lo)) throw ConfigError("interval must have lo < hi");
    if (c.model == "lattice" && (c.sites < 16 || !(c.spacing > 0))) throw ConfigError("lattice needs sites >= 16, spacing > 0");
    if (c.model == "spinboson" && (!(c.mass > 0) || c.n_max < 1 || c.grid_M < 8 || !(c.grid_k_max > 0)))
        throw ConfigError("spinboson needs mass > 0, n_max >= 1, M >= 8, k_max > 0");
    if (c.model == "file" && (c.H_path.empty() || c.A_path.empty())) throw ConfigError("file model needs file.H and file.A");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    return config_from_kv(parse_kv(in));
}

}  // namespace mourre::cli
