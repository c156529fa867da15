#pragma once

#include <vector>

#include "obstacle_ldp/skeleton.hpp"

namespace obstacle_ldp {

/// Trajectory event G in C([0,T]; H), defined through the terminal state.
struct EventSpec {
    enum class Kind { TerminalBall, TerminalMeanAbove };
    Kind kind = Kind::TerminalBall;
    Field center;
    double radius = 0.0;
    double threshold = 0.0;

    /// {|y(T) - center|_H <= radius}, radius > 0.
    static EventSpec ball(Field center, double radius);
    /// {int y(T) dx >= threshold}
    static EventSpec mean_above(double threshold);

    /// |y(T) - center|_H for balls, int y(T) dx for mean events.
    double functional(const Trajectory& traj, const Mesh& mesh) const;
    /// Distance of the trajectory to G in the event's own functional; 0 inside.
    double distance(const Trajectory& traj, const Mesh& mesh) const;
    bool contains(const Trajectory& traj, const Mesh& mesh) const;
};

struct RateEstimate {
    double value = 0.0;
    Control control;
    double constraint_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// 1/2 int |phi|_{H0}^2
double rate_value(const Control& c, double dt);

/// Controls constant on `blocks` equal time blocks in the first `modes` modes.
struct BlockParametrization {
    int n_steps = 1;
    int K = 1;
    int blocks = 1;
    int modes = 1;

    int size() const { return blocks * modes; }
    Control expand(const Eigen::VectorXd& params) const;
};

struct RateOptions {
    int time_blocks = 4;
    /// Modes carrying control; <= 0 means all K modes.
    int modes = 0;
    std::vector<double> mu_schedule{10.0, 100.0, 1000.0};
    int max_iter = 200;
    /// Central difference step, multiplied by max(1, |params|_inf).
    double fd_step = 1e-4;
    double grad_tol = 1e-7;
    /// Event distance accepted as "in G" when judging convergence.
    double event_tol = 1e-3;
    int jobs = 0;
};

/// Objective value and h0 norm of every accepted optimizer iterate.
struct RateTracePoint {
    double mu = 0.0;
    double objective = 0.0;
    double h0_sq = 0.0;
};

struct RateRun {
    RateEstimate estimate;
    std::vector<RateTracePoint> trace;
};

/// Skeleton map used by the rate module: the penalized solve at the final eps of
/// the schedule. A fixed eps keeps J_mu smooth for finite differences.
Trajectory rate_skeleton(const ProblemSpec& spec, const Control& c, const PenaltyConfig& pcfg);

/// Minimizes J_mu(c) = rate_value(c) + mu dist(g0(c), G)^2 with mu continuation over
/// block-constant controls, using BFGS steps on central-difference gradients.
RateRun minimize_rate(const ProblemSpec& spec, const EventSpec& event, const RateOptions& opts,
                      const PenaltyConfig& pcfg);

struct BruteGrid {
    /// Leading modes searched (K0 <= 2); controls are constant in time.
    int modes = 2;
    int points = 9;
    double lo = -3.0;
    double hi = 3.0;
    int jobs = 0;
    /// Grid size guard.
    long max_evaluations = 1000000;

    std::vector<double> values() const;
};

struct BruteForceResult {
    RateEstimate estimate;
    /// Parameters of the optimum in grid coordinates; empty if no control hit G.
    std::vector<double> argmin;
    long evaluations = 0;
    /// Event distance at every grid point, row-major over modes.
    std::vector<double> distances;
};

/// Minimum rate over the grid controls that land in G; value = +inf if none does.
BruteForceResult brute_force_rate(const ProblemSpec& spec, const EventSpec& event,
                                  const BruteGrid& grid, const PenaltyConfig& pcfg);

struct ContinuityReport {
    std::vector<int> n_list;
    std::vector<double> gaps_h;
    /// sup gap + (int |.|_V^p)^{1/p}; filled when the operator certifies alpha_bar.
    std::vector<double> gaps_t;
    bool decreasing = false;
    double final_over_first = 0.0;
    bool passed = false;
};

/// c_n = c + amplitude sin(2 pi n t / T) in mode 1 for n in n_list; gaps to g0(c).
ContinuityReport weak_continuity_probe(const ProblemSpec& spec, const Control& c,
                                       const std::vector<int>& n_list, double amplitude,
                                       const PenaltyConfig& pcfg);

}  // namespace obstacle_ldp
