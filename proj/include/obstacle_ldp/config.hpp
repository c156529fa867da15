#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "obstacle_ldp/rate.hpp"
#include "obstacle_ldp/skeleton.hpp"

namespace obstacle_ldp {

/// Problem data. Obstacle, forcing and initial datum are selectors from the
/// analytic library (see parse_selector) or file(path) grid imports.
struct ProblemConfig {
    double p = 2.0;
    double gamma = 1.0;
    int modes = 8;
    double lambda_decay = 2.0;
    double lambda_scale = 6.0 / (std::numbers::pi * std::numbers::pi);
    int n_cells = 32;
    int n_steps = 50;
    double horizon = 0.1;
    std::string obstacle = "constant(0)";
    std::string forcing = "constant(0)";
    std::string initial = "sine(1, 1)";

    bool operator==(const ProblemConfig&) const = default;
};

struct SolverConfig {
    double eps_first = 1e-1;
    double eps_last = 1e-5;
    double eps_factor = 0.25;
    /// Explicit schedule; overrides the geometric one when non-empty.
    std::vector<double> eps_schedule;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    double cauchy_tol = 1e-3;
    bool stop_early = true;

    bool operator==(const SolverConfig&) const = default;
};

struct TaskConfig {
    int trials = 100;
    std::vector<double> deltas{0.5, 0.25, 0.125};
    double delta = 0.25;
    int n_paths = 1000;
    double max_failure_fraction = 1e-3;
    /// mean_above(m), free_ball(r) (around the uncontrolled terminal state) or origin_ball(r).
    std::string event = "free_ball(0.1)";
    /// zero, mode(k, a) or rate(path) (control stored in a rate result file).
    std::string control = "zero";
    /// Rate result file for ldp-sweep; empty runs the optimizer first.
    std::string rate_file;
    std::vector<int> oscillations{2, 8, 32};
    double amplitude = 1.0;
    int time_blocks = 4;
    int rate_modes = 0;
    std::vector<double> mu_schedule{10.0, 100.0, 1000.0};
    int max_iter = 200;
    int brute_modes = 2;
    int brute_points = 9;
    double brute_lo = -3.0;
    double brute_hi = 3.0;
    bool importance_sampling = false;
    double is_delta = 0.25;
    int identity_checks = 5;

    bool operator==(const TaskConfig&) const = default;
};

struct RunConfig {
    ProblemConfig problem;
    SolverConfig solver;
    TaskConfig task;
    std::uint64_t master_seed = 0;

    bool operator==(const RunConfig&) const = default;
};

/// Parses the line-oriented format:
///   master_seed = 7
///   [problem]
///   p = 2          # comment
/// Unknown sections/keys, duplicates, syntax and semantic problems are all collected
/// and thrown together as one ConfigError. Relative file(...) paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Semantic violations of an already-populated config (empty when valid).
std::vector<std::string> validate_config(const RunConfig& config,
                                         const std::filesystem::path& base_dir = {});

/// OBSTACLE_LDP_SEED overrides the config; an explicit CLI seed overrides both.
std::uint64_t resolve_seed(const RunConfig& config, std::optional<std::uint64_t> cli_seed);

/// Analytic data library. Each selector is name(args...):
///   constant(c)           c
///   sine(k, a)            a sin(k pi x)
///   ramp(c0, c1)          c0 + c1 t
///   sine_ramp(k, a, b)    (a + b t) sin(k pi x)
///   file(path)            whitespace/comma separated nodal rows; one row is time-constant,
///                         otherwise row n holds time sample n
SpaceTimeFn parse_selector(const std::string& selector, const Mesh& mesh, double dt,
                           const std::filesystem::path& base_dir = {});

ProblemSpec build_problem(const ProblemConfig& config, const std::filesystem::path& base_dir = {});
PenaltyConfig build_penalty(const SolverConfig& config);

/// Event selector resolved against the problem (free_ball needs the uncontrolled skeleton).
EventSpec build_event(const std::string& selector, const ProblemSpec& spec,
                      const PenaltyConfig& pcfg);

/// Control selector: zero, mode(k, a) (constant a in mode k) or rate(path) (stored optimum).
Control build_control(const std::string& selector, const ProblemSpec& spec,
                      const std::filesystem::path& base_dir = {});
/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Content-addressed manifest: config hash, seed, command, result digests and versions.
/// No timestamps, so identical runs produce identical manifests.
void write_manifest(const std::filesystem::path& path, const RunConfig& config,
                    const std::string& command, std::uint64_t seed,
                    const std::map<std::string, std::string>& result_digests);

}  // namespace obstacle_ldp
