#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "obstacle_ldp/cli.hpp"
#include "obstacle_ldp/io.hpp"

using namespace obstacle_ldp;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(OBSTACLE_LDP_SOURCE_DIR) / "configs";

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("obstacle_ldp_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const char* kSmallSweep = R"(master_seed = 11
[problem]
gamma = 2
n_steps = 50
horizon = 0.1
forcing = constant(-1)
[solver]
eps_last = 1e-7
stop_early = false
[task]
event = free_ball(0.1)
deltas = 0.5, 0.25
n_paths = 300
)";

}  // namespace

TEST_CASE("check-operator on the default config passes and writes a manifest") {
    const fs::path out = scratch_dir("check");
    const auto r = cli({"check-operator", "--config", (kConfigs / "default.ini").string(), "--out", out.string()});
    CHECK(r.code == kExitOk);
    const Json checks = Json::parse(read_file(out / "operator_checks.json"));
    CHECK(checks.size() >= 9);
    const Json manifest = Json::parse(read_file(out / "manifest.json"));
    CHECK(manifest["command"] == "check-operator");
    CHECK(manifest["results"].contains("operator_checks.json"));
}

TEST_CASE("solve-skeleton on the heat config matches the exponential decay") {
    const fs::path out = scratch_dir("heat");
    const auto r = cli({"solve-skeleton", "--config", (kConfigs / "heat.ini").string(), "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    const Trajectory traj = read_trajectory_csv(out / "trajectory.csv");
    REQUIRE(traj.fields.size() >= 2);
    const double t = traj.times.back();
    const auto& y = traj.terminal();
    const int n = static_cast<int>(y.size());
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = (i + 1.0) / (n + 1.0);
        err = std::max(err, std::abs(y(i) - std::exp(-std::numbers::pi * std::numbers::pi * t) *
                                                std::sin(std::numbers::pi * x)));
    }
    CHECK(err <= 2e-2);
    CHECK(fs::exists(out / "reflection.csv"));
    CHECK(fs::exists(out / "skeleton.json"));
}

TEST_CASE("invalid invocations exit with the validation code") {
    const fs::path dir = scratch_dir("invalid");
    CHECK(cli({}).code == kExitValidation);
    CHECK(cli({"no-such-command", "--config", "x"}).code == kExitValidation);
    CHECK(cli({"simulate"}).code == kExitValidation);
    CHECK(cli({"simulate", "--config", (dir / "missing.ini").string()}).code == kExitValidation);
    const auto bad = write_config(dir, "bad.ini", "[problem]\np = 0.5\n[solver]\neps_first = -1\n");
    const auto r = cli({"simulate", "--config", bad.string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("p must exceed 1") != std::string::npos);
    CHECK(r.err.find("eps_first must be positive") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o" / "manifest.json"));
}

TEST_CASE("numerical failure exits with code 2 and writes error.json") {
    const fs::path dir = scratch_dir("numerical");
    const auto cfg = write_config(dir, "tight.ini",
                                  "[problem]\nforcing = constant(-5)\nhorizon = 0.5\n"
                                  "[solver]\neps_schedule = 0.1, 0.05\ncauchy_tol = 1e-12\n");
    const auto r = cli({"solve-skeleton", "--config", cfg.string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitNumerical);
    const Json e = Json::parse(read_file(dir / "o" / "error.json"));
    CHECK(e["error"] == "convergence");
    CHECK(e["cauchy_gaps"].size() == 1);
}

TEST_CASE("dry run validates without writing results") {
    const fs::path dir = scratch_dir("dry");
    const auto r = cli({"rate", "--config", (kConfigs / "ldp.ini").string(), "--out", (dir / "o").string(),
                        "--dry-run"});
    CHECK(r.code == kExitOk);
    CHECK_FALSE(r.out.empty());
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("ldp-sweep writes the sweep table") {
    const fs::path dir = scratch_dir("sweep");
    const auto cfg = write_config(dir, "sweep.ini", kSmallSweep);
    const auto r = cli({"ldp-sweep", "--config", cfg.string(), "--out", (dir / "o").string()});
    REQUIRE(r.code == kExitOk);
    const std::string csv = read_file(dir / "o" / "sweep.csv");
    CHECK(csv.rfind("delta,n_paths,p_hat,ci_lo,ci_hi,d2logp,neg_rate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    const Json sweep = Json::parse(read_file(dir / "o" / "sweep.json"));
    CHECK(sweep.contains("verdict"));
    CHECK(fs::exists(dir / "o" / "rate.json"));
    // Replaying the stored rate gives the same table.
    const auto cfg2 = write_config(
        dir, "sweep2.ini",
        std::string(kSmallSweep) + "rate_file = " +
            (dir / "o" / "rate.json").string() + "\n");
    REQUIRE(cli({"ldp-sweep", "--config", cfg2.string(), "--out", (dir / "o2").string()}).code == kExitOk);
    CHECK(read_file(dir / "o2" / "sweep.csv") == csv);
}

TEST_CASE("reruns reproduce every digest, regardless of the worker count") {
    const fs::path dir = scratch_dir("repro");
    const auto cfg = write_config(dir, "sim.ini",
                                  "master_seed = 4\n[problem]\ngamma = 2\nforcing = constant(-1)\n"
                                  "[task]\ndelta = 0.3\nn_paths = 200\n");
    REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", (dir / "a").string(), "--jobs", "1"}).code ==
            kExitOk);
    REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--jobs", "3"}).code ==
            kExitOk);
    CHECK(read_file(dir / "a" / "manifest.json") == read_file(dir / "b" / "manifest.json"));
    CHECK(read_file(dir / "a" / "paths.csv") == read_file(dir / "b" / "paths.csv"));
    REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "5"}).code ==
            kExitOk);
    CHECK(read_file(dir / "a" / "paths.csv") != read_file(dir / "c" / "paths.csv"));
}
