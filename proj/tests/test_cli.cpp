#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "dbose/kernels.hpp"
#include "dbose/runspec.hpp"

using namespace dbose;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(DBOSE_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("dbose_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST(RunSpecText, RoundTripsEveryField) {
    RunSpec a;
    a.command = "simulate";
    a.params.beta = 0.1 + 0.2;  // not representable in few digits
    a.params.n_particles = 4;
    a.params.edge = {3, 2};
    a.t = 1.0 / 3.0;
    a.z0 = {0.7, -1e-17};
    a.z1 = {-2.5, 3.25};
    a.sim.dt = 1e-4;
    a.sim.t_end = 0.5;
    a.sim.n_paths = 123456;
    a.sim.seed = 18446744073709551615ull;
    a.sim.zero_threshold = 3e-9;
    a.sim.drift_scale = 1.05;
    a.sim.workers = 3;
    a.quad.rel_tol = 1e-9;
    a.quad.abs_tol = 1e-13;
    a.checks = {"marginal", "doob"};
    a.out = "/tmp/x y";
    a.kernel = "pdown";
    a.rmax = 7.5;
    a.n = 33;
    a.tau = 0.25;
    a.dump_paths = 2;
    a.k_sigma = 4;
    RunSpec b = RunSpec::parse(a.to_text());
    EXPECT_EQ(a, b);
    EXPECT_EQ(b.params.beta, a.params.beta);
    EXPECT_EQ(b.sim.seed, a.sim.seed);
    EXPECT_EQ(b.z0.imag(), -1e-17);
    EXPECT_EQ(b.to_text(), a.to_text());
}

TEST(RunSpecText, CommentsOverridesAndErrors) {
    RunSpec r = RunSpec::parse("# header\n beta = 2 # trailing\n\nchecks = a, b ,\n");
    EXPECT_EQ(r.params.beta, 2.0);
    EXPECT_EQ(r.checks, (std::vector<std::string>{"a", "b"}));
    EXPECT_THROW(RunSpec::parse("bogus = 1\n"), ConfigError);
    EXPECT_THROW(RunSpec::parse("beta = 1x\n"), ConfigError);
    EXPECT_THROW(RunSpec::parse("beta\n"), ConfigError);
    EXPECT_THROW(RunSpec::parse("seed = -1\n"), ConfigError);
    EXPECT_THROW(RunSpec::parse("edge = 2\n"), ConfigError);
    EXPECT_THROW(RunSpec::parse("n-paths = 1.5\n"), ConfigError);
    EXPECT_EQ(RunSpec().sim.n_paths, 10000);
}

TEST(RunSpecText, AtomicWrite) {
    auto d = scratch("atomic");
    fs::path f = d / "a.txt";
    write_atomic(f.string(), "first");
    write_atomic(f.string(), "second");
    EXPECT_EQ(slurp(f), "second");
    for (auto& e : fs::directory_iterator(d)) EXPECT_EQ(e.path().filename(), "a.txt");
    EXPECT_THROW(write_atomic((d / "missing" / "b.txt").string(), "x"), ConfigError);
    fs::remove_all(d);
}

TEST(Cli, EvalMu0TrapezoidMass) {
    auto r = run("eval mu0 --beta 1 --rmax 12 --n 4001");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "r,mu0_density,radial_density");
    std::vector<double> rr, dd;
    while (std::getline(in, line)) {
        double a, b, c;
        char k1, k2;
        std::istringstream ls(line);
        if (line.find("inf") != std::string::npos) {
            rr.push_back(0.0);
            dd.push_back(0.0);
            continue;
        }
        ls >> a >> k1 >> b >> k2 >> c;
        rr.push_back(a);
        dd.push_back(c);
    }
    ASSERT_EQ(rr.size(), 4001u);
    double m = 0;
    for (std::size_t i = 0; i + 1 < rr.size(); ++i) m += 0.5 * (dd[i] + dd[i + 1]) * (rr[i + 1] - rr[i]);
    EXPECT_NEAR(m, 1.0, 1e-5);
    EXPECT_EQ(rr.back(), 12.0);
}

namespace {
std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> out;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        out.push_back(row);
    }
    return out;
}
}  // namespace

TEST(Cli, EvalExamples) {
    auto mu = csv_rows(run("eval mu0 --beta 1 --rmax 10 --n 512").out);
    ASSERT_EQ(mu.size(), 512u);
    double m = 0;
    for (std::size_t i = 0; i + 1 < mu.size(); ++i) m += 0.5 * (mu[i][2] + mu[i + 1][2]) * (mu[i + 1][0] - mu[i][0]);
    EXPECT_GE(m, 0.999);
    EXPECT_LE(m, 1.001);
    auto sb = csv_rows(run("eval sbeta --beta 1 --tau 1e-6").out);
    ASSERT_EQ(sb.size(), 1u);
    EXPECT_EQ(sb[0][1], s_beta(1.0, 1e-6));
    auto h = csv_rows(run("eval hitting --beta 1 --z0-re 1").out);
    ASSERT_FALSE(h.empty());
    EXPECT_NEAR(h.back()[2], 1.0, 1e-6);
}

TEST(Cli, EvalKernelsRun) {
    auto sb = run("eval sbeta --beta 2 --tau 0.15");
    ASSERT_EQ(sb.code, 0);
    EXPECT_EQ(std::count(sb.out.begin(), sb.out.end(), '\n'), 2);  // one value at --tau
    for (const char* k : {"hitting --n 8", "pdown --n 8", "semigroup --n 8", "ring --n 8",
                          "radial_marginal --n 8"}) {
        auto r = run(std::string("eval ") + k);
        EXPECT_EQ(r.code, 0) << k;
        EXPECT_GT(std::count(r.out.begin(), r.out.end(), '\n'), 8) << k;
    }
    EXPECT_EQ(run("eval nosuch").code, 3);
    EXPECT_EQ(run("eval mu0 --beta -1").code, 3);
    EXPECT_EQ(run("eval mu0 --beta abc").code, 3);
}

TEST(Cli, VerifySelectedChecks) {
    auto d = scratch("verify");
    auto f = d / "r.json";
    auto r = run("verify --checks marginal,comparison --n-paths 400 --seed 1 --out " + f.string());
    EXPECT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(slurp(f));
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["check_name"], "marginal");
    EXPECT_EQ(j[1]["check_name"], "comparison");
    for (auto& e : j) {
        for (const char* k : {"check_name", "analytic", "estimate", "std_error", "n_paths", "k_sigma", "verdict"})
            EXPECT_TRUE(e.contains(k)) << k;
        EXPECT_EQ(e.size(), 7u);
        EXPECT_EQ(e["verdict"], "pass");
    }
    fs::remove_all(d);
}

TEST(Cli, VerifyUnknownCheckAndFailure) {
    auto r = run("verify --checks marginal,nosuch --n-paths 200");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(nlohmann::json::parse(r.out).size(), 1u);
    // a 5% drift error fails the forward equation
    auto m = run("verify --checks forward_equation --z0-re 0 --n-paths 10000 --perturb-drift 1.05");
    EXPECT_EQ(m.code, 1);
    EXPECT_EQ(nlohmann::json::parse(m.out)[0]["verdict"], "fail");
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    auto d = scratch("config");
    std::ofstream(d / "c.cfg") << "checks = comparison\nn-paths = 50\nseed = 9\n";
    auto a = run("verify --config " + (d / "c.cfg").string());
    auto b = run("verify --config " + (d / "c.cfg").string() + " --n-paths 60");
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(nlohmann::json::parse(a.out)[0]["n_paths"], 50);
    EXPECT_EQ(nlohmann::json::parse(b.out)[0]["n_paths"], 60);
    std::ofstream(d / "bad.cfg") << "nope = 1\n";
    EXPECT_EQ(run("verify --config " + (d / "bad.cfg").string()).code, 3);
    EXPECT_EQ(run("verify --config " + (d / "missing.cfg").string()).code, 3);
    fs::remove_all(d);
}

TEST(Cli, DeterministicAcrossWorkers) {
    auto a = run("verify --checks marginal,doob --n-paths 500 --seed 5 --workers 1");
    auto b = run("verify --checks marginal,doob --n-paths 500 --seed 5 --workers 4");
    ASSERT_FALSE(a.out.empty());
    EXPECT_EQ(a.out, b.out);
    auto c = run("verify --checks marginal --n-paths 500 --seed 6");
    EXPECT_NE(nlohmann::json::parse(a.out)[0]["estimate"], nlohmann::json::parse(c.out)[0]["estimate"]);
}

TEST(Cli, SimulateThreeParticlesAndDtHalving) {
    auto d = scratch("sim3");
    auto r = run("simulate --n-particles 3 --edge 2,1 --n-paths 1000 --t-end 1 --dt 0.002 --z0-re 0 --out " + d.string());
    ASSERT_EQ(r.code, 0);
    auto s = nlohmann::json::parse(slurp(d / "summary.json"));
    EXPECT_EQ(s["n_particles"], 3);
    EXPECT_EQ(s["assembly_invariants_verified"], true);
    double coarse = s["zero_hit_step_fraction"];
    ASSERT_EQ(run("simulate --n-particles 3 --edge 2,1 --n-paths 1000 --t-end 1 --dt 0.001 --z0-re 0 --out " + d.string()).code, 0);
    double fine = nlohmann::json::parse(slurp(d / "summary.json"))["zero_hit_step_fraction"];
    EXPECT_LT(fine, coarse);
    fs::remove_all(d);
}

TEST(Cli, SimulateDumps) {
    auto d = scratch("sim");
    auto r = run("simulate --n-particles 3 --edge 3,1 --z0-re 0.5 --dt 0.01 --t-end 0.2 --n-paths 8 --dump-paths 2 --out " +
                 d.string());
    ASSERT_EQ(r.code, 0);
    auto s = nlohmann::json::parse(slurp(d / "summary.json"));
    EXPECT_EQ(s["n_particles"], 3);
    EXPECT_EQ(s["n_paths"], 8);
    EXPECT_EQ(s["steps"], 20);
    EXPECT_EQ(s["assembly_invariants_verified"], true);
    // csv: header + dumped paths x (M + 1) rows
    std::istringstream csv(slurp(d / "paths.csv"));
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    EXPECT_EQ(line.rfind("path,time,", 0), 0u);
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 2 * 21);
    // binary header
    std::string bin = slurp(d / "paths.bin");
    ASSERT_GE(bin.size(), 8u + 16 + 16);
    EXPECT_EQ(bin.substr(0, 8), "DBOSEPTH");
    std::uint32_t v[4];
    std::memcpy(v, bin.data() + 8, 16);
    EXPECT_EQ(v[0], 1u);
    EXPECT_EQ(v[1], 3u);
    EXPECT_EQ(v[2], 20u);
    EXPECT_EQ(v[3], 2u);
    std::size_t per_path = 8 + 21 * (3 * 16 + 8 + 1);
    EXPECT_EQ(bin.size(), 8u + 16 + 16 + 2 * per_path);
    // same seed, same bytes
    auto d2 = scratch("sim2");
    run("simulate --n-particles 3 --edge 3,1 --z0-re 0.5 --dt 0.01 --t-end 0.2 --n-paths 8 --dump-paths 2 --workers 3 --out " +
        d2.string());
    EXPECT_EQ(slurp(d2 / "paths.bin"), bin);
    EXPECT_EQ(run("simulate --edge 3,1 --out " + d.string()).code, 3);
    fs::remove_all(d);
    fs::remove_all(d2);
}
