#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dbose/errors.hpp"
#include "dbose/quadrature.hpp"
#include "dbose/simulate.hpp"

namespace dbose {

// %.17g, enough to re-read every double bit for bit
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// everything one CLI invocation needs; flat key = value text on disk
struct RunSpec {
    std::string command = "verify";  // eval | simulate | verify
    ModelParams params{};
    SimConfig sim{};
    QuadConfig quad{};
    double t = 1.0;  // evaluation / check time
    Complex z0{1.0, 0.0};
    Complex z1{0.5, 0.0};
    std::string out;
    std::vector<std::string> checks;
    // eval
    std::string kernel = "mu0";
    double rmax = 10.0;
    int n = 512;
    double tau = 1.0;
    // simulate
    int dump_paths = 16;
    // verify
    double k_sigma = 3.0;

    RunSpec() { sim.n_paths = 10000; }

    bool operator==(const RunSpec& o) const { return to_text() == o.to_text(); }

    std::string to_text() const {
        std::ostringstream s;
        auto kv = [&](const char* k, const std::string& v) { s << k << " = " << v << '\n'; };
        kv("command", command);
        kv("beta", fmt17(params.beta));
        kv("n-particles", std::to_string(params.n_particles));
        kv("edge", std::to_string(params.edge.hi) + "," + std::to_string(params.edge.lo));
        kv("t", fmt17(t));
        kv("z0-re", fmt17(z0.real()));
        kv("z0-im", fmt17(z0.imag()));
        kv("z1-re", fmt17(z1.real()));
        kv("z1-im", fmt17(z1.imag()));
        kv("dt", fmt17(sim.dt));
        kv("t-end", fmt17(sim.t_end));
        kv("n-paths", std::to_string(sim.n_paths));
        kv("seed", std::to_string(sim.seed));
        kv("zero-threshold", fmt17(sim.zero_threshold));
        kv("perturb-drift", fmt17(sim.drift_scale));
        kv("workers", std::to_string(sim.workers));
        kv("rel-tol", fmt17(quad.rel_tol));
        kv("abs-tol", fmt17(quad.abs_tol));
        std::string cs;
        for (std::size_t i = 0; i < checks.size(); ++i) cs += (i ? "," : "") + checks[i];
        kv("checks", cs);
        kv("out", out);
        kv("kernel", kernel);
        kv("rmax", fmt17(rmax));
        kv("n", std::to_string(n));
        kv("tau", fmt17(tau));
        kv("dump-paths", std::to_string(dump_paths));
        kv("k-sigma", fmt17(k_sigma));
        return s.str();
    }

    // one key; throws ConfigError on unknown keys or unparsable values
    void set(const std::string& key, const std::string& v) {
        auto num = [&](double& dst) {
            std::size_t pos = 0;
            try {
                dst = std::stod(v, &pos);
            } catch (...) {
                pos = 0;
            }
            if (pos == 0 || pos != v.size()) throw ConfigError("bad number for " + key + ": '" + v + "'");
        };
        auto integer = [&](long long& dst) {
            std::size_t pos = 0;
            try {
                dst = std::stoll(v, &pos);
            } catch (...) {
                pos = 0;
            }
            if (pos == 0 || pos != v.size()) throw ConfigError("bad integer for " + key + ": '" + v + "'");
        };
        double d = 0;
        long long i = 0;
        if (key == "command") command = v;
        else if (key == "beta") num(params.beta);
        else if (key == "n-particles") { integer(i); params.n_particles = int(i); }
        else if (key == "edge") params.edge = parse_edge(v);
        else if (key == "t") num(t);
        else if (key == "z0-re") { num(d); z0.real(d); }
        else if (key == "z0-im") { num(d); z0.imag(d); }
        else if (key == "z1-re") { num(d); z1.real(d); }
        else if (key == "z1-im") { num(d); z1.imag(d); }
        else if (key == "dt") num(sim.dt);
        else if (key == "t-end") num(sim.t_end);
        else if (key == "n-paths") { integer(i); sim.n_paths = long(i); }
        else if (key == "seed") {
            std::size_t pos = 0;
            try {
                sim.seed = std::stoull(v, &pos);
            } catch (...) {
                pos = 0;
            }
            if (pos == 0 || pos != v.size() || v[0] == '-') throw ConfigError("bad seed: '" + v + "'");
        }
        else if (key == "zero-threshold") num(sim.zero_threshold);
        else if (key == "perturb-drift") num(sim.drift_scale);
        else if (key == "workers") { integer(i); sim.workers = int(i); }
        else if (key == "rel-tol") num(quad.rel_tol);
        else if (key == "abs-tol") num(quad.abs_tol);
        else if (key == "checks") checks = split_list(v);
        else if (key == "out") out = v;
        else if (key == "kernel") kernel = v;
        else if (key == "rmax") num(rmax);
        else if (key == "n") { integer(i); n = int(i); }
        else if (key == "tau") num(tau);
        else if (key == "dump-paths") { integer(i); dump_paths = int(i); }
        else if (key == "k-sigma") num(k_sigma);
        else throw ConfigError("unknown config key '" + key + "'");
    }

    static RunSpec parse(const std::string& text) {
        RunSpec r;
        r.apply(text);
        return r;
    }

    // key = value lines over the current values; '#' starts a comment
    void apply(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    static Edge parse_edge(const std::string& v) {
        auto parts = split_list(v);
        if (parts.size() != 2) throw ConfigError("edge must be \"j',j\", got '" + v + "'");
        try {
            return Edge{std::stoi(parts[0]), std::stoi(parts[1])};
        } catch (...) {
            throw ConfigError("edge must be two integers, got '" + v + "'");
        }
    }

    static std::vector<std::string> split_list(const std::string& v) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(v);
        while (std::getline(in, cur, ','))
            if (auto t = trim(cur); !t.empty()) out.push_back(t);
        return out;
    }

    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// write to a sibling temp file, then rename over the target
inline void write_atomic(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::path p(path);
    fs::path tmp = p;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
        if (!o) throw ConfigError("cannot write " + tmp.string());
        o.write(bytes.data(), std::streamsize(bytes.size()));
        o.flush();
        if (!o) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ConfigError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ConfigError("cannot move output into place at " + path);
    }
}

}  // namespace dbose
