#pragma once

// Run configuration: a flat `key = value` text format with `#` comments and
// `[section]` headers. Every key belongs to one section and may also be
// written before the first header; anything else is rejected.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgmc/grid.hpp"

namespace dgmc::harness {

struct LadderRung {
    double eps = 0.0;
    int n = 0;
    bool operator==(const LadderRung&) const = default;
};

struct RunConfig {
    std::string scenario = "shrinking-circle";
    int dim = 2;
    double L = 1.0;
    int n = 512;
    double eps = 0.01;
    std::optional<double> dt;     // nullopt = auto
    std::optional<double> T_end;  // nullopt = auto
    std::string scheme = "semi-implicit";
    double r0 = 0.25;
    double r_c = 0.125;
    double delta = 2.0;   // perturbed-circle radius offset, units of eps
    double gap = 1.5;     // multiplicity-two half gap, units of eps
    int box = 0;          // multiplicity box in cells; 0 = smallest divisor of n covering 8 eps
    int stride = 0;       // sample stride in steps; 0 = about 40 samples
    std::uint64_t seed = 1;
    long checkpoint_every = 0;
    std::string out = "out";
    std::vector<LadderRung> ladder;
};

namespace detail {

inline std::string trim(std::string s) {
    auto ns = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), ns));
    s.erase(std::find_if(s.rbegin(), s.rend(), ns).base(), s.end());
    return s;
}

inline std::string where(int line) { return "line " + std::to_string(line) + ": "; }

inline double parse_double(const std::string& v, int line, const std::string& key) {
    double x = 0.0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x)) {
        throw ConfigError(where(line) + "'" + key + "' expects a number, got '" + v + "'");
    }
    return x;
}

inline long parse_long(const std::string& v, int line, const std::string& key) {
    long x = 0;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e) {
        throw ConfigError(where(line) + "'" + key + "' expects an integer, got '" + v + "'");
    }
    return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

/// Canonical section of every key.
inline const std::map<std::string, std::string>& key_sections() {
    static const std::map<std::string, std::string> m = {
        {"scenario", "scenario"}, {"dim", "scenario"},        {"r0", "scenario"},   {"r_c", "scenario"},
        {"delta", "scenario"},    {"gap", "scenario"},        {"seed", "scenario"}, {"L", "grid"},
        {"n", "grid"},            {"eps", "model"},           {"dt", "time"},       {"T_end", "time"},
        {"scheme", "time"},       {"stride", "output"},       {"box", "output"},    {"checkpoint_every", "output"},
        {"out", "output"},        {"ladder_eps", "ladder"},   {"ladder_n", "ladder"},
    };
    return m;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    std::map<std::string, int> seen;
    std::vector<double> ladder_eps;
    std::vector<long> ladder_n;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        if (auto h = s.find('#'); h != std::string::npos) s.erase(h);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(detail::where(line) + "malformed section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            static const std::vector<std::string> known = {"scenario", "grid", "model", "time", "output", "ladder"};
            if (std::find(known.begin(), known.end(), section) == known.end()) {
                throw ConfigError(detail::where(line) + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(detail::where(line) + "expected 'key = value'");
        std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (section == "ladder" && (key == "eps" || key == "n")) key = "ladder_" + key;
        const auto& ks = detail::key_sections();
        auto it = ks.find(key);
        if (it == ks.end()) throw ConfigError(detail::where(line) + "unknown key '" + key + "'");
        if (!section.empty() && it->second != section) {
            throw ConfigError(detail::where(line) + "key '" + key + "' does not belong in [" + section + "]");
        }
        if (seen.count(key)) throw ConfigError(detail::where(line) + "duplicate key '" + key + "'");
        seen[key] = line;
        if (val.empty()) throw ConfigError(detail::where(line) + "empty value for '" + key + "'");

        if (key == "scenario") c.scenario = val;
        else if (key == "dim") c.dim = static_cast<int>(detail::parse_long(val, line, key));
        else if (key == "r0") c.r0 = detail::parse_double(val, line, key);
        else if (key == "r_c") c.r_c = detail::parse_double(val, line, key);
        else if (key == "delta") c.delta = detail::parse_double(val, line, key);
        else if (key == "gap") c.gap = detail::parse_double(val, line, key);
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(detail::parse_long(val, line, key));
        else if (key == "L") c.L = detail::parse_double(val, line, key);
        else if (key == "n") c.n = static_cast<int>(detail::parse_long(val, line, key));
        else if (key == "eps") c.eps = detail::parse_double(val, line, key);
        else if (key == "dt") c.dt = val == "auto" ? std::nullopt : std::optional(detail::parse_double(val, line, key));
        else if (key == "T_end")
            c.T_end = val == "auto" ? std::nullopt : std::optional(detail::parse_double(val, line, key));
        else if (key == "scheme") {
            if (val != "semi-implicit" && val != "explicit") {
                throw ConfigError(detail::where(line) + "scheme must be 'semi-implicit' or 'explicit'");
            }
            c.scheme = val;
        } else if (key == "stride") c.stride = static_cast<int>(detail::parse_long(val, line, key));
        else if (key == "box") c.box = static_cast<int>(detail::parse_long(val, line, key));
        else if (key == "checkpoint_every") c.checkpoint_every = detail::parse_long(val, line, key);
        else if (key == "out") c.out = val;
        else if (key == "ladder_eps") {
            for (const auto& e : detail::split_list(val)) ladder_eps.push_back(detail::parse_double(e, line, key));
        } else if (key == "ladder_n") {
            for (const auto& e : detail::split_list(val)) ladder_n.push_back(detail::parse_long(e, line, key));
        }
    }
    if (ladder_eps.size() != ladder_n.size()) throw ConfigError("ladder eps and n lists differ in length");
    for (std::size_t i = 0; i < ladder_eps.size(); ++i) c.ladder.push_back({ladder_eps[i], static_cast<int>(ladder_n[i])});
    if (!c.ladder.empty() && c.dt) throw ConfigError("a ladder uses the automatic time step per rung; remove dt");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

/// Canonical text of a config; parse_config(to_text(c)) == c.
inline std::string to_text(const RunConfig& c) {
    std::ostringstream o;
    o.precision(17);
    o << "[scenario]\nscenario = " << c.scenario << "\ndim = " << c.dim << "\nr0 = " << c.r0 << "\nr_c = " << c.r_c
      << "\ndelta = " << c.delta << "\ngap = " << c.gap << "\nseed = " << c.seed << "\n[grid]\nL = " << c.L
      << "\nn = " << c.n << "\n[model]\neps = " << c.eps << "\n[time]\ndt = ";
    if (c.dt) o << *c.dt; else o << "auto";
    o << "\nT_end = ";
    if (c.T_end) o << *c.T_end; else o << "auto";
    o << "\nscheme = " << c.scheme << "\n[output]\nstride = " << c.stride << "\nbox = " << c.box
      << "\ncheckpoint_every = " << c.checkpoint_every << "\nout = " << c.out << "\n";
    if (!c.ladder.empty()) {
        o << "[ladder]\neps = ";
        for (std::size_t i = 0; i < c.ladder.size(); ++i) o << (i ? ", " : "") << c.ladder[i].eps;
        o << "\nn = ";
        for (std::size_t i = 0; i < c.ladder.size(); ++i) o << (i ? ", " : "") << c.ladder[i].n;
        o << "\n";
    }
    return o.str();
}

/// FNV-1a over the canonical config text, output location excluded.
inline std::uint64_t content_hash(const RunConfig& c) {
    RunConfig k = c;
    k.out.clear();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_text(k)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace dgmc::harness
