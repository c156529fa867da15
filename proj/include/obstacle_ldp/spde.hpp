#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "obstacle_ldp/skeleton.hpp"
#include "obstacle_ldp/stats.hpp"

namespace obstacle_ldp {

struct PathResult {
    Trajectory trajectory;
    ReflectionMeasure reflection;
    std::uint64_t path_seed = 0;
    double delta = 0.0;
};

/// One path of the reflected SPDE at noise scale delta, penalized at fixed eps.
/// Drift and penalty are implicit, the noise term explicit.
PathResult simulate_spde(const ProblemSpec& spec, double delta, const WienerPath& w, double eps,
                         const PenaltyConfig& pcfg);

struct ShiftedPair {
    PathResult v;
    Trajectory u;
};

/// v: noise delta G~ dW plus control drift G~ phi; u: the controlled skeleton at the
/// same eps, so that v == u bitwise at delta = 0.
ShiftedPair simulate_shifted_pair(const ProblemSpec& spec, double delta, const WienerPath& w,
                                  const Control& c, double eps, const PenaltyConfig& pcfg);

struct CouplingGap {
    double sup_gap = 0.0;
    /// (sum_n dt |v_n - u_n|_V^p)^{1/p}
    double v_gap = 0.0;
};

CouplingGap coupling_gap(const Trajectory& v, const Trajectory& u, const Mesh& mesh, double p);

/// Per-path summary line of a Monte-Carlo batch.
struct PathSummary {
    int index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    double sup_norm = 0.0;
    double functional = 0.0;
    bool event = false;
    /// log dP/dQ for tilted batches, 0 otherwise.
    double log_weight = 0.0;
    std::string error;
};

/// (functional value, event indicator) of a trajectory.
using PathFunctional = std::function<std::pair<double, bool>(const Trajectory&)>;

struct BatchOptions {
    int n_paths = 1000;
    std::uint64_t master_seed = 0;
    int jobs = 0;
    /// Abort when failures / n_paths exceeds this.
    double max_failure_fraction = 1e-3;
};

struct BatchResult {
    double delta = 0.0;
    double eps = 0.0;
    std::vector<PathSummary> paths;
    int failures = 0;
};

/// Simulates paths i = 0..n_paths-1 with seeds derive_seed(master_seed, i). With a
/// tilt control the noise is shifted (W + (1/delta) int c) and log_weight carries the
/// Girsanov log density. Failed paths are kept and flagged; too many abort with NumericError.
BatchResult run_batch(const ProblemSpec& spec, double delta, double eps, const PenaltyConfig& pcfg,
                      const BatchOptions& opts, const PathFunctional& functional,
                      const Control* tilt = nullptr);

struct CouplingRow {
    double delta = 0.0;
    int n_paths = 0;
    int failures = 0;
    MeanEstimate sup_gap_sq;
    MeanEstimate v_gap;
};

struct CouplingSweep {
    std::vector<CouplingRow> rows;
    /// Log-log fit of E sup |v - u|_H^2 against delta.
    LinearFit fit;
    /// Largest sup-gap between v and the plain SPDE driven by the shifted path,
    /// over the checked paths.
    double girsanov_identity_gap = 0.0;
};

/// Coupling experiment: for each delta, n_paths shifted pairs with the fixed control c.
CouplingSweep couple_sweep(const ProblemSpec& spec, const Control& c,
                           const std::vector<double>& deltas, const BatchOptions& opts, double eps,
                           const PenaltyConfig& pcfg, int identity_checks = 5);

}  // namespace obstacle_ldp
