#pragma once

#include <cmath>
#include <numbers>

#include "obstacle_ldp/skeleton.hpp"

namespace fixtures {

using namespace obstacle_ldp;

/// Obstacle psi = 0 pressed by f = -5 from u0 = sin(pi x): the contact set grows over time.
inline ProblemSpec active_problem(double p, int n_cells = 32, int n_steps = 100, double horizon = 0.5) {
    return make_problem(
        OperatorSpec::p_laplace(p), 1.0, 4, 2.0, 6.0 / (std::numbers::pi * std::numbers::pi),
        n_cells, horizon, n_steps, [](double, double) { return 0.0; },
        [](double, double) { return -5.0; },
        [](double x) { return std::sin(std::numbers::pi * x); });
}

/// Heat equation with an obstacle far below the solution.
inline ProblemSpec heat_problem(int n_cells = 64, int n_steps = 200, double horizon = 0.1) {
    return make_problem(
        OperatorSpec::p_laplace(2.0), 1.0, 4, 2.0, 6.0 / (std::numbers::pi * std::numbers::pi),
        n_cells, horizon, n_steps, [](double, double) { return -1000.0; },
        [](double, double) { return 0.0; },
        [](double x) { return std::sin(std::numbers::pi * x); });
}

/// The problem used by the rate and sweep tests: gamma = 2, f = -1 on a short horizon.
inline ProblemSpec ldp_problem(int n_steps = 50) {
    return make_problem(
        OperatorSpec::p_laplace(2.0), 2.0, 8, 2.0, 6.0 / (std::numbers::pi * std::numbers::pi), 32,
        0.1, n_steps, [](double, double) { return 0.0; }, [](double, double) { return -1.0; },
        [](double x) { return std::sin(std::numbers::pi * x); });
}

inline PenaltyConfig fine_penalty() {
    PenaltyConfig p;
    p.eps_schedule = PenaltyConfig::geometric_schedule(1e-1, 1e-7, 0.25);
    p.stop_early = false;
    return p;
}

}  // namespace fixtures
