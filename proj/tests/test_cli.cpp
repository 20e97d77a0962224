#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "doctest.h"
#include "json.hpp"
#include "scbf/commands.hpp"
#include "scbf/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct WorkDir {
    fs::path path;
    WorkDir() : path(fs::temp_directory_path() / ("scbf_cli_test_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~WorkDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path work_dir() {
    static const WorkDir d;
    return d.path;
}

std::string cli() {
    const char* c = std::getenv("SCBF_CLI");
    REQUIRE_MESSAGE(c != nullptr, "SCBF_CLI must point at the scbf binary");
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const std::string& sub, const json& cfg, const std::string& tag) {
    const fs::path c = work_dir() / (tag + ".json");
    std::ofstream(c) << cfg.dump(2);
    const fs::path o = work_dir() / (tag + ".out");
    const fs::path e = work_dir() / (tag + ".err");
    const std::string cmd = cli() + " " + sub + " " + c.string() + " >" + o.string() + " 2>" + e.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

json base_config(const std::string& out) {
    json j = json::parse(R"({
      "grid": {"dim": 2, "n": 32},
      "model": {"mu": 0.05, "alpha": 0.0, "beta": 0.05, "varpi": 2},
      "noise": {"kind": "additive", "epsilon": 1e-3},
      "interpolant": {"kind": "spectral", "theta": 0.125},
      "assimilation": {"sigma": 2.0,
                       "truth_init": {"kind": "random", "seed": 3, "energy": 1e-4},
                       "da_init": {"kind": "offset",
                                   "perturbation": {"kind": "random", "seed": 5, "energy": 1.0, "k_max": 3}}},
      "stepper": {"dt": 0.01, "t_end": 2.0, "record_stride": 10},
      "ensemble": {"n_members": 2},
      "master_seed": 1
    })");
    j["output_dir"] = (work_dir() / out).string();
    return j;
}

}  // namespace

TEST_CASE("config parsing") {
    const scbf::RunConfig c = scbf::parse_config(base_config("x"));
    CHECK(c.n == 32);
    CHECK(c.echo["stepper"]["scheme"] == "imex-euler-maruyama");
    CHECK(c.echo["ensemble"]["moment_orders"] == json::array({1.0, 2.0}));
    CHECK(scbf::parse_config(c.echo).echo == c.echo);

    json bad = base_config("x");
    bad["model"]["viscosity"] = 1.0;
    try {
        scbf::parse_config(bad);
        CHECK(false);
    } catch (const scbf::ConfigError& e) {
        CHECK(std::string(e.what()).find("model.viscosity") != std::string::npos);
    }
    bad = base_config("x");
    bad["stepper"]["dt"] = "small";
    CHECK_THROWS_WITH_AS(scbf::parse_config(bad), doctest::Contains("stepper.dt"), scbf::ConfigError);
    bad = base_config("x");
    bad["noise"]["kind"] = "colored";
    CHECK_THROWS_AS(scbf::parse_config(bad), scbf::ConfigError);
}

TEST_CASE("check exit codes") {
    const Run ok = run("check", base_config("check"), "check_ok");
    CHECK(ok.code == 0);
    const json j = json::parse(ok.out);
    CHECK(j["check"]["any_guarantee"] == true);
    CHECK(j["check"]["strongest"]["theorem_id"] == "Pathwise-2d");
    CHECK(j["version"] == scbf::kVersion);

    json d3 = base_config("check");
    d3["grid"] = {{"dim", 3}, {"n", 16}};
    const Run bad = run("check", d3, "check_d3");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("well-posedness") != std::string::npos);

    json high = base_config("check");
    high["assimilation"]["sigma"] = 1000.0;
    CHECK(run("check", high, "check_high").code == 2);

    json typo = base_config("check");
    typo["stepper"]["dtt"] = 0.1;
    const Run t = run("check", typo, "check_typo");
    CHECK(t.code == 1);
    CHECK(t.err.find("stepper.dtt") != std::string::npos);

    const std::string missing = cli() + " check " + (work_dir() / "nope.json").string() + " 2>/dev/null";
    const int status = std::system(missing.c_str());
    CHECK(WEXITSTATUS(status) == 1);
    CHECK(WEXITSTATUS(std::system((cli() + " 2>/dev/null >/dev/null").c_str())) == 1);
}

TEST_CASE("assimilate") {
    const fs::path out = work_dir() / "assim" / "nested";
    CHECK_FALSE(fs::exists(out));
    json cfg = base_config("assim/nested");
    const Run r = run("assimilate", cfg, "assim");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out / "trajectory.csv"));
    const json s = json::parse(slurp(out / "summary.json"));
    CHECK(s["guarantee"]["applicable"] == true);
    CHECK(s["fitted_rate"].get<double>() >= 0.9 * s["predicted_rate"].get<double>());
    const std::string csv = slurp(out / "trajectory.csv");
    CHECK(csv.rfind(std::string("# version ") + scbf::kVersion, 0) == 0);
    CHECK(csv.find("# config {") != std::string::npos);

    json null = base_config("assim_null");
    null["assimilation"]["sigma"] = 0.0;
    const Run n = run("assimilate", null, "assim_null");
    REQUIRE(n.code == 0);
    const json ns = json::parse(n.out);
    CHECK(ns["guarantee"]["message"] == "no guarantee applicable; null control");
    CHECK(ns["guarantee"]["null_control"] == true);

    json blow = base_config("assim_blow");
    blow["assimilation"]["sigma"] = 1e7;
    blow["interpolant"]["theta"] = 1e-3;
    const Run b = run("assimilate", blow, "assim_blow");
    CHECK(b.code == 3);
    CHECK(b.err.find("last good time") != std::string::npos);
}

TEST_CASE("ensemble smoke run, determinism, echo reproduction") {
    const auto t0 = std::chrono::steady_clock::now();
    const Run a = run("ensemble", base_config("ens_a"), "ens_a");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(a.code == 0);
    CHECK(secs < 60.0);
    const Run b = run("ensemble", base_config("ens_b"), "ens_b");
    REQUIRE(b.code == 0);
    const std::string ca = slurp(work_dir() / "ens_a" / "ensemble.csv");
    const std::string cb = slurp(work_dir() / "ens_b" / "ensemble.csv");
    // identical apart from the echoed output_dir line
    auto strip = [](const std::string& s) { return s.substr(s.find("\nt,")); };
    CHECK(strip(ca) == strip(cb));
    const json j = json::parse(slurp(work_dir() / "ens_a" / "ensemble.json"));
    CHECK(j["n_excluded"] == 0);
    CHECK(j["n_members"] == 2);
    CHECK(j.contains("moments"));

    // rerunning the echoed config reproduces the CSV byte for byte
    json echo = j["config"];
    const Run c = run("ensemble", echo, "ens_echo");
    REQUIRE(c.code == 0);
    CHECK(slurp(work_dir() / "ens_a" / "ensemble.csv") == ca);
}

TEST_CASE("simulate-truth, estimate-c0, fit") {
    json cfg = base_config("truth");
    cfg["noise"]["epsilon"] = 0.0;
    cfg["stepper"]["snapshot_stride"] = 100;
    const Run r = run("simulate-truth", cfg, "truth");
    REQUIRE(r.code == 0);
    const json s = json::parse(r.out);
    CHECK(s["energy_balance_residual"].get<double>() >= 0.0);
    CHECK(s["snapshots"].size() == 3);
    const fs::path snap = work_dir() / "truth" / s["snapshots"][2].get<std::string>();
    const scbf::VectorField u = scbf::read_snapshot(snap.string());
    CHECK(u.grid.n() == 32);

    json c0 = base_config("c0");
    c0["interpolant"] = {{"kind", "volume"}, {"theta", 3.141592653589793 / 4}, {"c0_trials", 100}};
    const Run e = run("estimate-c0", c0, "c0");
    REQUIRE(e.code == 0);
    const json ej = json::parse(e.out);
    CHECK(ej["c0"].get<double>() == doctest::Approx(1.5 * ej["max_ratio"].get<double>()));
    CHECK(ej["cells_per_axis"] == 8);

    json fit = base_config("fit");
    fit["fit"] = {{"input", (work_dir() / "assim" / "nested" / "trajectory.csv").string()}, {"column", "err_l2sq"}};
    const Run f = run("fit", fit, "fit");
    REQUIRE(f.code == 0);
    CHECK(json::parse(f.out)["fit"]["rate"].get<double>() > 0.0);
    fit["fit"]["column"] = "nonexistent";
    CHECK(run("fit", fit, "fit_bad").code == 1);
}
